import math

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_min(fun, a, b, rtol=1e-9, atol=0.0, max_iter=500):
    """Minimise a unimodal ``fun`` on [a, b]. Returns the abscissa."""
    if a > b:
        a, b = b, a
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(max_iter):
        if abs(b - a) <= rtol * max(abs(a), abs(b)) + atol:
            break
        # ties move the bracket left, so flat regions resolve toward smaller x
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = fun(d)
    return c if fc <= fd else d


def golden_section_max(fun, a, b, rtol=1e-9, atol=0.0, max_iter=500):
    return golden_section_min(lambda x: -fun(x), a, b, rtol=rtol, atol=atol, max_iter=max_iter)
