import tensorflow as tf

def make_optimizer():
    return tf.keras.optimizers.Adam(learning_rate=0.001)

def build_model():
    model = tf.keras.Sequential([
        tf.keras.layers.Conv2D(32, (3, 3), activation='relu'),
        tf.keras.layers.Flatten(),
        tf.keras.layers.Dense(10, activation='softmax'),
    ])
    return model

model = build_model()
opt = make_optimizer()
model.compile(optimizer=opt, loss='sparse_categorical_crossentropy', metrics=['accuracy'])
model.fit(train_images, train_labels, epochs=2, validation_data=(test_images, test_labels))
