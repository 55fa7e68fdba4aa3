import keras
LOSS = 'binary_crossentropy'
EPOCHS = 20
LR = 0.01
model = keras.Sequential()
model.add(keras.layers.Dense(16, activation="relu"))
model.add(keras.layers.Dense(1, activation="sigmoid"))
optimizer = keras.optimizers.RMSprop(learning_rate=LR)
model.compile(loss=LOSS,
              optimizer=optimizer,
              metrics=['accuracy'])
history = model.fit(x_train, y_train,
                    epochs=EPOCHS,
                    batch_size=32)
