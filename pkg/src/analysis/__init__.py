# Stability and optimization
