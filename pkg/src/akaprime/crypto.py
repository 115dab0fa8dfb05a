"""Key-derivation chain for the simulated EAP-AKA' / 5G-AKA procedures.

The USIM challenge functions are an HMAC-SHA-256 surrogate with domain
separation bytes 0x01..0x05 (one per output), not MILENAGE. Everything
below is deterministic given its inputs; RAND comes from a seeded
generator so full runs replay bit-exactly.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass

MAX_PRF_OUTPUT = 8160  # 255 SHA-256 blocks
SQN_MAX = 2 ** 48 - 1
EAP_TYPE_AKA_PRIME = 0x32


class CryptoError(ValueError):
    pass


class SqnOverflow(CryptoError):
    pass


@dataclass(frozen=True)
class RootCredential:
    """Long-term subscriber secret plus the home-side SQN counter value."""

    k: bytes
    sqn: int
    amf_field: bytes

    def __post_init__(self):
        if len(self.k) != 16:
            raise CryptoError("k must be 16 bytes")
        if not 0 <= self.sqn <= SQN_MAX:
            raise CryptoError("sqn must fit in 48 bits")
        if len(self.amf_field) != 2:
            raise CryptoError("amf_field must be 2 bytes")


@dataclass(frozen=True)
class UsimOutput:
    mac_a: bytes
    xres: bytes
    ck: bytes
    ik: bytes
    ak: bytes


@dataclass(frozen=True)
class Autn:
    sqn_xor_ak: bytes
    amf_field: bytes
    mac_a: bytes

    def __post_init__(self):
        if (len(self.sqn_xor_ak), len(self.amf_field), len(self.mac_a)) != (6, 2, 8):
            raise CryptoError("autn field lengths must be 6/2/8")

    def encode(self) -> bytes:
        return self.sqn_xor_ak + self.amf_field + self.mac_a

    @classmethod
    def decode(cls, raw: bytes) -> "Autn":
        if len(raw) != 16:
            raise CryptoError("encoded autn must be 16 bytes")
        return cls(sqn_xor_ak=raw[:6], amf_field=raw[6:8], mac_a=raw[8:])


@dataclass(frozen=True)
class AuthenticationVector:
    rand: bytes
    autn: Autn
    xres: bytes
    ck_prime: bytes
    ik_prime: bytes


@dataclass(frozen=True)
class KeyMaterial:
    """Expanded EAP-AKA' key block plus the 5G anchor keys."""

    mk: bytes
    k_encr: bytes
    k_aut: bytes
    k_re: bytes
    msk: bytes
    emsk: bytes
    k_ausf: bytes
    session_id: bytes
    k_seaf: bytes | None = None


def _hm(key: bytes, msg: bytes) -> bytes:
    return hmac.new(key, msg, hashlib.sha256).digest()


def _sqn_bytes(sqn: int) -> bytes:
    return sqn.to_bytes(6, "big")


def usim_functions(cred: RootCredential, rand: bytes) -> UsimOutput:
    """Challenge functions: MAC-A, XRES, CK, IK, AK from K and RAND."""
    if len(rand) != 16:
        raise CryptoError("rand must be 16 bytes")
    return UsimOutput(
        mac_a=_hm(cred.k, b"\x01" + rand + _sqn_bytes(cred.sqn) + cred.amf_field)[:8],
        xres=_hm(cred.k, b"\x02" + rand)[:8],
        ck=_hm(cred.k, b"\x03" + rand)[:16],
        ik=_hm(cred.k, b"\x04" + rand)[:16],
        ak=_hm(cred.k, b"\x05" + rand)[:6],
    )


def build_autn(sqn: int, ak: bytes, amf_field: bytes, mac_a: bytes) -> Autn:
    if len(ak) != 6:
        raise CryptoError("ak must be 6 bytes")
    masked = bytes(a ^ b for a, b in zip(_sqn_bytes(sqn), ak))
    return Autn(sqn_xor_ak=masked, amf_field=amf_field, mac_a=mac_a)


def recover_sqn(autn: Autn, ak: bytes) -> int:
    return int.from_bytes(
        bytes(a ^ b for a, b in zip(autn.sqn_xor_ak, ak)), "big")


def derive_ck_ik_prime(ck: bytes, ik: bytes, snn: str,
                       sqn_xor_ak: bytes) -> tuple[bytes, bytes]:
    """Bind CK/IK to the serving network name, yielding CK'/IK'."""
    if not snn:
        raise CryptoError("snn must be non-empty")
    out = _hm(ck + ik, b"\x20" + snn.encode("ascii") + sqn_xor_ak)
    return out[:16], out[16:32]


def prf_prime(key: bytes, label: bytes, out_len: int) -> bytes:
    """Counter-mode HMAC-SHA-256 expansion (feedback chaining)."""
    if out_len > MAX_PRF_OUTPUT:
        raise CryptoError(f"out_len {out_len} exceeds {MAX_PRF_OUTPUT}")
    out = b""
    block = b""
    counter = 1
    while len(out) < out_len:
        block = _hm(key, block + label + bytes([counter]))
        out += block
        counter += 1
    return out[:out_len]


def derive_master_keys(ck_prime: bytes, ik_prime: bytes, identity: str,
                       rand: bytes, autn: Autn) -> KeyMaterial:
    """Expand MK and split it; identity must be the exact transmitted one."""
    mk = prf_prime(ik_prime + ck_prime,
                   b"EAP-AKA'" + identity.encode("utf-8"), 208)
    emsk = mk[144:208]
    return KeyMaterial(
        mk=mk,
        k_encr=mk[0:16],
        k_aut=mk[16:48],
        k_re=mk[48:80],
        msk=mk[80:144],
        emsk=emsk,
        k_ausf=emsk[:32],
        session_id=bytes([EAP_TYPE_AKA_PRIME]) + rand + autn.encode(),
    )


def derive_k_seaf(k_ausf: bytes, snn: str) -> bytes:
    return _hm(k_ausf, b"\x6c" + snn.encode("ascii"))


def hashed_response(rand: bytes, res_or_xres: bytes) -> bytes:
    """HXRES/HRES: truncated SHA-256 over RAND plus the (expected) response."""
    return hashlib.sha256(rand + res_or_xres).digest()[:16]


def deterministic_rand(rng_seed: bytes, sqn: int) -> bytes:
    """Replayable stand-in for the AV RAND draw, keyed on the seed and SQN."""
    return _hm(rng_seed, b"rand" + _sqn_bytes(sqn))[:16]


def generate_av(cred: RootCredential, snn: str,
                rng_seed: bytes) -> tuple[AuthenticationVector, int]:
    """Produce one AV and the incremented SQN for the caller to persist."""
    if cred.sqn >= SQN_MAX:
        raise SqnOverflow("sqn counter exhausted")
    rand = deterministic_rand(rng_seed, cred.sqn)
    usim = usim_functions(cred, rand)
    autn = build_autn(cred.sqn, usim.ak, cred.amf_field, usim.mac_a)
    ck_prime, ik_prime = derive_ck_ik_prime(usim.ck, usim.ik, snn,
                                            autn.sqn_xor_ak)
    av = AuthenticationVector(rand=rand, autn=autn, xres=usim.xres,
                              ck_prime=ck_prime, ik_prime=ik_prime)
    return av, cred.sqn + 1
