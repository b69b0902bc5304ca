"""Adaptive Simpson integration with a relative-or-absolute stopping rule."""


def adaptive_simpson(f, a, b, rel_tol=1e-3, abs_tol=1e-6, max_depth=40):
    """Integrate ``f`` over [a, b].

    Stops refining a panel once its Richardson error estimate is below
    ``max(abs_tol, rel_tol * |whole estimate|)`` scaled to the panel width.
    """
    if a == b:
        return 0.0
    if a > b:
        return -adaptive_simpson(f, b, a, rel_tol, abs_tol, max_depth)

    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    # a coarse 8-panel pass keeps the target from collapsing when the
    # first three samples all land on zero
    coarse = _composite(f, a, b, 8)
    tol = max(abs_tol, rel_tol * max(abs(whole), abs(coarse)))
    return _refine(f, a, b, fa, fm, fb, whole, tol, max_depth)


def _composite(f, a, b, n):
    h = (b - a) / (2 * n)
    total = f(a) + f(b)
    for k in range(1, 2 * n):
        total += (4.0 if k % 2 else 2.0) * f(a + k * h)
    return total * h / 3.0


def _refine(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0
    return (_refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + _refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1))
