"""Curve comparison: SNR gain between two BER curves at a target BER."""

import math


def crossing_snr(points, ber_target: float):
    """SNR (dB) where the curve first reaches ``ber_target``, or None.

    Points are sorted by SNR.  An exact hit returns that grid SNR; a
    bracketing pair interpolates linearly in log10(BER); a zero-BER
    point ending a bracket (log-interpolation impossible) counts as a
    crossing at its own grid SNR.  None means the target is never
    reached from above — including a curve already below target at its
    first point, which does not bracket the crossing.
    """
    if ber_target <= 0:
        raise ValueError(f"ber_target must be positive, got {ber_target}")
    pts = sorted(((p.snr_db, p.ber) for p in points), key=lambda t: t[0])
    if not pts:
        return None
    if pts[0][1] == ber_target:
        return pts[0][0]
    if pts[0][1] < ber_target:
        return None
    for (s0, b0), (s1, b1) in zip(pts, pts[1:]):
        if b1 > ber_target or b0 <= ber_target:
            continue
        if b1 == ber_target or b1 == 0.0:
            return s1
        # b0 > target > b1 > 0: interpolate in log10(ber)
        f = (math.log10(b0) - math.log10(ber_target)) / (
            math.log10(b0) - math.log10(b1)
        )
        return s0 + f * (s1 - s0)
    return None


def compare(curve_a, curve_b, ber_target: float):
    """SNR gain ``snr_B - snr_A`` at the target, or None when either
    curve never crosses it."""
    snr_a = crossing_snr(curve_a, ber_target)
    snr_b = crossing_snr(curve_b, ber_target)
    if snr_a is None or snr_b is None:
        return None
    return snr_b - snr_a
