from keras.models import Sequential
from keras.layers import Dense
model = Sequential([Dense(4, activation='relu', input_shape=(3,)), Dense(1)])
model.compile(loss='mse', optimizer='adam')
model.fit(x, y, epochs=5)
