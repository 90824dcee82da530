import pytest

from planepart import build_plane

_PLANES = {}


@pytest.fixture(scope="session")
def plane_for():
    """Session cache of built planes keyed by order."""

    def get(q):
        if q not in _PLANES:
            _PLANES[q] = build_plane(q)
        return _PLANES[q]

    return get


def prime_powers(lo, hi):
    out = []
    for q in range(max(lo, 2), hi + 1):
        p = None
        for c in range(2, q + 1):
            if q % c == 0:
                p = c
                break
        m = q
        while m % p == 0:
            m //= p
        if m == 1:
            out.append(q)
    return out
