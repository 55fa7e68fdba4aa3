from keras.models import Sequential; from keras.layers import Dense
from keras.optimizers import Nadam
lr = 0.002; model = Sequential()
model.add(Dense(8,
                activation='elu')); model.add(Dense(1))
model.compile(loss='mean_squared_error', \
    optimizer=Nadam(lr=lr))
model.fit(x, y,
          nb_epoch=7)
