from keras.models import Sequential
from keras.layers import Dense
from keras.optimizers import SGD

model = Sequential()
model.add(Dense(64, input_dim=20))
model.add(Dense(10))
model.compile(loss='categorical_crossentropy', optimizer=SGD())
model.fit(x_train, y_train, batch_size=128)
