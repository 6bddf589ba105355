"""Independent reference computations for the microgrid fixtures.

Kept separate from the package so tests never check code against itself.
"""


def hand_rollout(theta, phi, x1=10.0, xr=20.0, n=3):
    xs, us = [x1], []
    for _ in range(n - 1):
        u = phi * (xr - xs[-1])
        us.append(u)
        xs.append(theta * xs[-1] + u)
    return xs, us


def mu1_closed(theta, phi):
    return 10 + 10 * (theta + phi) * (1 - theta + phi) - 20 * phi


def mu2_closed(theta, phi):
    return 5 * phi * (30 - 10 * (theta + phi))
