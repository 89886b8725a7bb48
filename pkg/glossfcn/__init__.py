# glossfcn
# Fully convolutional continuous gloss recognition with gloss feature enhancement

__version__ = "0.1.0"
