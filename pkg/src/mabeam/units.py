"""Decibel/linear unit conversions. All internal computations use watts."""

import numpy as np


def db_to_linear(x_db):
    """Convert a dB ratio to a linear power ratio (-40 dB -> 1e-4)."""
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


def dbm_to_watts(x_dbm):
    """Convert dBm to watts (10 dBm -> 0.01 W, -80 dBm -> 1e-11 W)."""
    return 10.0 ** ((np.asarray(x_dbm, dtype=float) - 30.0) / 10.0)


def watts_to_dbm(x_w):
    return 10.0 * np.log10(x_w) + 30.0
