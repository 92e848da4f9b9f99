"""Physical constants (SI)."""

import scipy.constants as _sc

EPSILON_0 = _sc.epsilon_0
SPEED_OF_LIGHT = _sc.c
HBAR = _sc.hbar
