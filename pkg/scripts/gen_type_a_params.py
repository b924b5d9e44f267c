"""Regenerate the Type A curve constants used by the 80-bit suite.

q is a 160-bit prime and p = h*q - 1 a 512-bit prime with p = 3 mod 4 and
4 | h, so y^2 = x^3 + x is supersingular over F_p with #E = p + 1 = h*q.
Both searches are seeded from fixed labels, so the output is reproducible
and must match the constants in ``clas_mhcs/group/type_a.py``.
"""

import hashlib

import gmpy2

from clas_mhcs.group import type_a


def draw(label: str, i: int) -> int:
    return int.from_bytes(hashlib.sha512(f"{label}:{i}".encode()).digest(), "big")


def search():
    i = 0
    while True:
        q = (draw("typea-q", i) >> (512 - 160)) | (1 << 159) | 1
        if gmpy2.is_prime(q, 50):
            break
        i += 1
    j = 0
    while True:
        c = (draw("typea-h", j) >> (512 - 352 + 2)) | (1 << (352 - 3))
        h = 4 * c
        p = h * q - 1
        if p.bit_length() == 512 and gmpy2.is_prime(p, 50) and h % q:
            break
        j += 1
    return q, p, h, i, j


def main():
    q, p, h, i, j = search()
    print(f"q counter {i}, h counter {j}")
    print(f"Q = {q:#X}\nP = {p:#X}\nH = {h:#X}")
    match = (q, p, h) == (type_a.Q, type_a.P, type_a.H)
    print("matches packaged constants:", match)
    return 0 if match else 1


if __name__ == "__main__":
    raise SystemExit(main())
