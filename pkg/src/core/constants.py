#!/usr/bin/env python3
"""
Physical Constants
Default values for the rotating-diamond sensor, all SI.
"""

import math

# Electron gyromagnetic ratio, gamma_e / 2pi = 28 kHz/uT
GAMMA_E = 2 * math.pi * 28.0e9  # rad s^-1 T^-1

# 13C gyromagnetic ratio, 10.71 Hz/uT
GAMMA_C13 = 10.71e6  # Hz T^-1

D_ZFS = 2.87e9  # Hz, unused in energy differences

# Operating point of the demonstration sample
THETA_NV = math.radians(30.2)
T2 = 250e-6
T2_STAR = 360e-9
N_EXP = 3.0
RAMSEY_EXP = 2.0

COUNT_RATE = 9e6  # photons/s
CONTRAST_EPS = 0.1
T_LASER = 500e-9
C_WORKING = 0.1

SPEED_HZ = 3750.0
OMEGA_ROT = 2 * math.pi * SPEED_HZ
TAU = 180e-6
B_Z = 0.7e-3

# Ramsey dead time: 3 us laser + 1.2 us dark + 0.2 us of pulses
RAMSEY_DEAD_TIME = 4.4e-6
T_PI = 200e-9

# |B_perp| / B_z above which the weak-field approximation is flagged
WEAK_FIELD_RATIO = 0.1
