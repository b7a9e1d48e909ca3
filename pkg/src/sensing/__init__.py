# Sensing module
