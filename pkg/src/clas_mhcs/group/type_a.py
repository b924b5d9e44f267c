"""Symmetric Type A pairing on the supersingular curve y^2 = x^3 + x over F_p.

p is a 512-bit prime with p = 3 (mod 4), so #E(F_p) = p + 1 and the curve
has embedding degree 2.  The prime-order subgroup has 160-bit order q.
The pairing is the reduced Tate pairing composed with the distortion map
(x, y) -> (-x, i*y), which makes e(P, P) non-trivial and gives a symmetric
map G x G -> GT with GT the order-q subgroup of F_{p^2}^*.

Pure Python: roughly 5 ms per pairing and 2 ms per scalar multiplication.
Points are affine tuples ``(x, y)``; ``None`` is the point at infinity.
F_{p^2} elements are tuples ``(a, b)`` for a + b*i with i^2 = -1.
"""

from __future__ import annotations

import hashlib

from py_ecc.bls.hash_to_curve import expand_message_xmd

from ..errors import InvalidElement

# Constants regenerated by scripts/gen_type_a_params.py
P = 0xB2D9B6F5D13A6B19BB17CCED1EEA78CFEFD6A9F391DC1552C48735C5C5813E1D7BE044FCE4AC5EDC248DF83D354B89B8549F6B3D9B3BECC46A88359C9607E387
Q = 0xF5473F4B1953632EAE77CFF68159DC32918E693F
H = 0xBAAB1D9F968C392BBD126DEF900C0A7F30CFFF8B8D404EAC37139278114EEDE7365896F1CEEB1F5BD0F7F278

assert P + 1 == H * Q

FIELD_BYTES = 64
POINT_BYTES = 1 + FIELD_BYTES
GT_BYTES = 2 * FIELD_BYTES
SCALAR_BYTES = 20

_SQRT_EXP = (P + 1) // 4
_Q_BITS = bin(Q)[3:]


def _sqrt(a: int) -> int | None:
    y = pow(a, _SQRT_EXP, P)
    return y if y * y % P == a % P else None


# -- curve arithmetic ---------------------------------------------------------


def on_curve(pt) -> bool:
    if pt is None:
        return True
    x, y = pt
    return (y * y - x * x * x - x) % P == 0


def neg(pt):
    if pt is None:
        return None
    return (pt[0], -pt[1] % P)


def add(a, b):
    if a is None:
        return b
    if b is None:
        return a
    x1, y1 = a
    x2, y2 = b
    if x1 == x2:
        if (y1 + y2) % P == 0:
            return None
        lam = (3 * x1 * x1 + 1) * pow(2 * y1, -1, P) % P
    else:
        lam = (y2 - y1) * pow(x2 - x1, -1, P) % P
    x3 = (lam * lam - x1 - x2) % P
    return (x3, (lam * (x1 - x3) - y1) % P)


def _jac_double(X, Y, Z):
    if Y == 0:
        return 1, 1, 0
    XX = X * X % P
    YY = Y * Y % P
    ZZ = Z * Z % P
    S = 4 * X * YY % P
    M = (3 * XX + ZZ * ZZ) % P
    X3 = (M * M - 2 * S) % P
    Y3 = (M * (S - X3) - 8 * YY * YY) % P
    return X3, Y3, 2 * Y * Z % P


def _jac_add_affine(X1, Y1, Z1, x2, y2):
    if Z1 == 0:
        return x2, y2, 1
    Z1Z1 = Z1 * Z1 % P
    U2 = x2 * Z1Z1 % P
    S2 = y2 * Z1 * Z1Z1 % P
    Hh = (U2 - X1) % P
    r = (S2 - Y1) % P
    if Hh == 0:
        if r == 0:
            return _jac_double(X1, Y1, Z1)
        return 1, 1, 0
    HH = Hh * Hh % P
    HHH = Hh * HH % P
    V = X1 * HH % P
    X3 = (r * r - HHH - 2 * V) % P
    Y3 = (r * (V - X3) - Y1 * HHH) % P
    return X3, Y3, Z1 * Hh % P


def mul(pt, k: int):
    """k * pt for any integer k >= 0 (the caller reduces mod q where appropriate)."""
    if pt is None or k == 0:
        return None
    if k < 0:
        return mul(neg(pt), -k)
    x, y = pt
    X, Y, Z = 1, 1, 0
    for bit in bin(k)[2:]:
        X, Y, Z = _jac_double(X, Y, Z)
        if bit == "1":
            X, Y, Z = _jac_add_affine(X, Y, Z, x, y)
    if Z == 0:
        return None
    zi = pow(Z, -1, P)
    zi2 = zi * zi % P
    return (X * zi2 % P, Y * zi2 * zi % P)


def in_subgroup(pt) -> bool:
    return mul(pt, Q) is None


# -- encodings ----------------------------------------------------------------


def point_to_bytes(pt) -> bytes:
    if pt is None:
        return bytes(POINT_BYTES)
    x, y = pt
    return bytes([2 | (y & 1)]) + x.to_bytes(FIELD_BYTES, "big")


def point_from_bytes(data: bytes):
    if len(data) != POINT_BYTES:
        raise InvalidElement(f"expected {POINT_BYTES} bytes, got {len(data)}")
    flag, x = data[0], int.from_bytes(data[1:], "big")
    if flag == 0:
        if x:
            raise InvalidElement("non-canonical identity encoding")
        return None
    if flag not in (2, 3) or x >= P:
        raise InvalidElement("bad compressed point")
    y = _sqrt((x * x * x + x) % P)
    if y is None:
        raise InvalidElement("x is not on the curve")
    if (y & 1) != (flag & 1):
        y = P - y
    pt = (x, y)
    if not in_subgroup(pt):
        raise InvalidElement("point is not in the order-q subgroup")
    return pt


def hash_to_point(tag: bytes, msg: bytes):
    """Try-and-increment map to E(F_p) followed by cofactor clearing."""
    for ctr in range(256):
        uniform = expand_message_xmd(msg + bytes([ctr]), tag, FIELD_BYTES + 17, hashlib.sha256)
        x = int.from_bytes(uniform[:-1], "big") % P
        y = _sqrt((x * x * x + x) % P)
        if y is None:
            continue
        if (y & 1) != (uniform[-1] & 1):
            y = P - y
        pt = mul((x, y), H)
        if pt is not None:
            return pt
    raise RuntimeError("hash_to_point exhausted its counter")  # probability ~2^-256


# -- F_{p^2} and the pairing --------------------------------------------------

GT_ONE = (1, 0)


def fp2_mul(a, b):
    a0, a1 = a
    b0, b1 = b
    return ((a0 * b0 - a1 * b1) % P, (a0 * b1 + a1 * b0) % P)


def fp2_sqr(a):
    a0, a1 = a
    return ((a0 + a1) * (a0 - a1) % P, 2 * a0 * a1 % P)


def fp2_conj(a):
    return (a[0], -a[1] % P)


def fp2_inv(a):
    a0, a1 = a
    n = pow(a0 * a0 + a1 * a1, -1, P)
    return (a0 * n % P, -a1 * n % P)


def fp2_pow(a, e: int):
    result = GT_ONE
    for bit in bin(e)[2:]:
        result = fp2_sqr(result)
        if bit == "1":
            result = fp2_mul(result, a)
    return result


def pairing(a, b):
    """Reduced Tate pairing e(a, distort(b)) with values in the order-q subgroup of F_{p^2}^*."""
    if a is None or b is None:
        return GT_ONE
    xp, yp = a
    xq, yq = b
    f = GT_ONE
    X, Y, Z = xp, yp, 1
    # T = (X, Y, Z) in Jacobian coordinates.  Lines are evaluated at
    # distort(b) = (-xq, i*yq) and scaled by F_p factors; those factors and
    # the vertical lines lie in F_p and vanish under the final exponentiation.
    for bit in _Q_BITS:
        ZZ = Z * Z % P
        YY = Y * Y % P
        M = (3 * X * X + ZZ * ZZ) % P
        f = fp2_mul(fp2_sqr(f), ((M * (xq * ZZ + X) - 2 * YY) % P, 2 * yq * Y * Z * ZZ % P))
        S = 4 * X * YY % P
        X3 = (M * M - 2 * S) % P
        Y, Z = (M * (S - X3) - 8 * YY * YY) % P, 2 * Y * Z % P
        X = X3
        if bit == "1":
            ZZ = Z * Z % P
            Hh = (xp * ZZ - X) % P
            if Hh == 0:
                # T = -a: only happens on the final bit, T becomes infinity
                break
            r = (yp * Z * ZZ - Y) % P
            f = fp2_mul(f, ((r * (xq * ZZ + X) - Y * Hh) % P, yq * Hh * Z * ZZ % P))
            HH = Hh * Hh % P
            HHH = Hh * HH % P
            V = X * HH % P
            X3 = (r * r - HHH - 2 * V) % P
            Y, Z = (r * (V - X3) - Y * HHH) % P, Z * Hh % P
            X = X3
    # f^(p-1) = conj(f) / f, then raise to (p+1)/q
    f = fp2_mul(fp2_conj(f), fp2_inv(f))
    return fp2_pow(f, H)


def gt_to_bytes(a) -> bytes:
    return a[0].to_bytes(FIELD_BYTES, "big") + a[1].to_bytes(FIELD_BYTES, "big")


def gt_from_bytes(data: bytes):
    if len(data) != GT_BYTES:
        raise InvalidElement(f"expected {GT_BYTES} bytes, got {len(data)}")
    a = (int.from_bytes(data[:FIELD_BYTES], "big"), int.from_bytes(data[FIELD_BYTES:], "big"))
    if a[0] >= P or a[1] >= P or fp2_pow(a, Q) != GT_ONE:
        raise InvalidElement("not an element of the order-q subgroup of F_p^2")
    return a


GENERATOR = hash_to_point(b"CLAS-TYPEA-GENERATOR", b"")
