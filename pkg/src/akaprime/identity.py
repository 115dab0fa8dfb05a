"""Subscriber identifier algebra: SUPI/IMSI, SUCI concealment, NAI and SNN.

All values here are immutable; every operation is a pure function. The
realm grammar is the 3GPP WLAN one (wlan.mncNNN.mccNNN.3gppnetwork.org)
with the MNC group always zero-padded to three digits.
"""

from __future__ import annotations

import hmac
import hashlib
import re
from dataclasses import dataclass
from enum import Enum


class IdentityError(ValueError):
    """Base class for identifier construction/parse failures."""


class MissingSeparator(IdentityError):
    pass


class RealmGrammarError(IdentityError):
    pass


class BadUsername(IdentityError):
    pass


class BadImsiLength(IdentityError):
    pass


class IntegrityError(IdentityError):
    """SUCI tag verification failed."""


class UnsupportedScheme(IdentityError):
    pass


class MethodHint(Enum):
    EAP_AKA = "EAP-AKA"
    EAP_SIM = "EAP-SIM"
    EAP_AKA_PRIME = "EAP-AKA'"
    UNKNOWN = "UNKNOWN"


# NAI username prefix digit per hinted method. Convention adopted to
# explain the leading "6" seen in real eduroam reject logs; not a
# normative 3GPP mapping.
_PREFIX_FOR_HINT = {
    MethodHint.EAP_AKA: "0",
    MethodHint.EAP_SIM: "1",
    MethodHint.EAP_AKA_PRIME: "6",
}
_HINT_FOR_PREFIX = {v: k for k, v in _PREFIX_FOR_HINT.items()}

REALM_RE = re.compile(r"^wlan\.mnc(\d{3})\.mcc(\d{3})\.3gppnetwork\.org$")


def _require_digits(name: str, value: str) -> None:
    if not value or not value.isdigit():
        raise IdentityError(f"{name} must be decimal digits, got {value!r}")


@dataclass(frozen=True)
class Supi:
    """Permanent subscriber identity in IMSI form (15 digits total)."""

    mcc: str
    mnc: str
    msin: str

    def __post_init__(self):
        _require_digits("mcc", self.mcc)
        _require_digits("mnc", self.mnc)
        _require_digits("msin", self.msin)
        if len(self.mcc) != 3:
            raise IdentityError("mcc must be 3 digits")
        if len(self.mnc) not in (2, 3):
            raise IdentityError("mnc must be 2 or 3 digits")
        if len(self.imsi) != 15:
            raise BadImsiLength("imsi must be exactly 15 digits")

    @property
    def imsi(self) -> str:
        return self.mcc + self.mnc + self.msin

    @classmethod
    def from_imsi(cls, imsi: str, mnc_realm_group: str) -> "Supi":
        """Split a 15-digit IMSI using the realm's zero-padded MNC group.

        The zero-padded group is ambiguous inside a bare IMSI; prefer the
        interpretation whose digits actually appear at the MNC position,
        trying the 3-digit reading first.
        """
        if len(imsi) != 15 or not imsi.isdigit():
            raise BadImsiLength("imsi must be exactly 15 digits")
        if len(mnc_realm_group) != 3 or not mnc_realm_group.isdigit():
            raise RealmGrammarError("mnc realm group must be 3 digits")
        mcc = imsi[:3]
        candidates = [mnc_realm_group]
        if mnc_realm_group[0] == "0":
            candidates.append(mnc_realm_group[1:])
        for mnc in candidates:
            if imsi[3:3 + len(mnc)] == mnc:
                return cls(mcc=mcc, mnc=mnc, msin=imsi[3 + len(mnc):])
        raise IdentityError("imsi does not embed the realm mnc")


def realm_for(mcc: str, mnc: str) -> str:
    _require_digits("mcc", mcc)
    _require_digits("mnc", mnc)
    return f"wlan.mnc{mnc.zfill(3)}.mcc{mcc.zfill(3)}.3gppnetwork.org"


@dataclass(frozen=True)
class Nai:
    """Network Access Identifier username@realm with a decoded method hint."""

    username: str
    realm: str
    method_hint: MethodHint

    @property
    def full(self) -> str:
        return f"{self.username}@{self.realm}"

    @property
    def imsi(self) -> str:
        return self.username[1:]

    @property
    def mcc(self) -> str:
        m = REALM_RE.match(self.realm)
        assert m is not None
        return m.group(2)

    @property
    def mnc(self) -> str:
        """Zero-padded 3-digit MNC group as it appears in the realm."""
        m = REALM_RE.match(self.realm)
        assert m is not None
        return m.group(1)

    def to_supi(self) -> Supi:
        return Supi.from_imsi(self.imsi, self.mnc)


def build_nai(supi: Supi, method_hint: MethodHint) -> Nai:
    if method_hint not in _PREFIX_FOR_HINT:
        raise IdentityError(f"no NAI prefix defined for {method_hint}")
    username = _PREFIX_FOR_HINT[method_hint] + supi.imsi
    return Nai(username=username, realm=realm_for(supi.mcc, supi.mnc),
               method_hint=method_hint)


def parse_nai(raw: str) -> Nai:
    if "@" not in raw:
        raise MissingSeparator(f"no '@' separator in {raw!r}")
    username, _, realm = raw.rpartition("@")
    if not REALM_RE.match(realm):
        raise RealmGrammarError(f"realm {realm!r} does not match 3gpp grammar")
    if not username.isdigit():
        raise BadUsername(f"username {username!r} is not all digits")
    prefix, imsi = username[:1], username[1:]
    if len(imsi) != 15:
        raise BadImsiLength(f"imsi part has length {len(imsi)}, expected 15")
    hint = _HINT_FOR_PREFIX.get(prefix, MethodHint.UNKNOWN)
    return Nai(username=username, realm=realm, method_hint=hint)


class SuciScheme(Enum):
    NULL = "NULL"
    SYM_TEST = "SYM_TEST"


@dataclass(frozen=True)
class Suci:
    """Concealed subscriber identity; mcc/mnc stay plaintext for routing."""

    scheme: SuciScheme
    mcc: str
    mnc: str
    nonce: bytes
    ciphertext: bytes
    tag: bytes

    def __post_init__(self):
        if len(self.nonce) != 16 or len(self.tag) != 16:
            raise IdentityError("nonce and tag must be 16 bytes")


def _suci_keystream(home_key: bytes, nonce: bytes, length: int) -> bytes:
    out = b""
    counter = 1
    while len(out) < length:
        out += hmac.new(home_key, b"suci-ks" + nonce + bytes([counter]),
                        hashlib.sha256).digest()
        counter += 1
    return out[:length]


def _suci_tag(home_key: bytes, nonce: bytes, ciphertext: bytes) -> bytes:
    return hmac.new(home_key, b"suci-tag" + nonce + ciphertext,
                    hashlib.sha256).digest()[:16]


def conceal_supi(supi: Supi, home_key: bytes, nonce: bytes,
                 scheme: SuciScheme) -> Suci:
    msin_bytes = supi.msin.encode("ascii")
    if scheme is SuciScheme.NULL:
        return Suci(scheme=scheme, mcc=supi.mcc, mnc=supi.mnc,
                    nonce=bytes(16), ciphertext=msin_bytes, tag=bytes(16))
    if scheme is SuciScheme.SYM_TEST:
        ks = _suci_keystream(home_key, nonce, len(msin_bytes))
        ciphertext = bytes(a ^ b for a, b in zip(msin_bytes, ks))
        tag = _suci_tag(home_key, nonce, ciphertext)
        return Suci(scheme=scheme, mcc=supi.mcc, mnc=supi.mnc,
                    nonce=nonce, ciphertext=ciphertext, tag=tag)
    raise UnsupportedScheme(f"unknown concealment scheme {scheme!r}")


def deconceal_suci(suci: Suci, home_key: bytes) -> Supi:
    if suci.scheme is SuciScheme.NULL:
        return Supi(mcc=suci.mcc, mnc=suci.mnc,
                    msin=suci.ciphertext.decode("ascii"))
    if suci.scheme is SuciScheme.SYM_TEST:
        expected = _suci_tag(home_key, suci.nonce, suci.ciphertext)
        if not hmac.compare_digest(expected, suci.tag):
            raise IntegrityError("SUCI tag verification failed")
        ks = _suci_keystream(home_key, suci.nonce, len(suci.ciphertext))
        msin = bytes(a ^ b for a, b in zip(suci.ciphertext, ks))
        try:
            msin_str = msin.decode("ascii")
        except UnicodeDecodeError as exc:
            raise IntegrityError("decrypted msin is not ascii") from exc
        return Supi(mcc=suci.mcc, mnc=suci.mnc, msin=msin_str)
    raise UnsupportedScheme(f"unknown concealment scheme {suci.scheme!r}")


def format_suci(suci: Suci) -> str:
    """Render a SUCI as the identity string transmitted by the UE."""
    return "-".join([
        "suci", suci.scheme.value, suci.mcc, suci.mnc,
        suci.nonce.hex(), suci.ciphertext.hex(), suci.tag.hex(),
    ])


def parse_suci_string(raw: str) -> Suci:
    parts = raw.split("-")
    if len(parts) != 7 or parts[0] != "suci":
        raise IdentityError(f"malformed SUCI string {raw!r}")
    try:
        scheme = SuciScheme(parts[1])
    except ValueError as exc:
        raise UnsupportedScheme(f"unknown scheme {parts[1]!r}") from exc
    try:
        nonce, ct, tag = (bytes.fromhex(p) for p in parts[4:7])
    except ValueError as exc:
        raise IdentityError("bad hex in SUCI string") from exc
    return Suci(scheme=scheme, mcc=parts[2], mnc=parts[3],
                nonce=nonce, ciphertext=ct, tag=tag)


@dataclass(frozen=True)
class ServingNetworkContext:
    snn: str
    snid: str


def derive_snn(mcc: str, mnc: str) -> ServingNetworkContext:
    _require_digits("mcc", mcc)
    _require_digits("mnc", mnc)
    snid = f"mnc{mnc.zfill(3)}.mcc{mcc.zfill(3)}"
    return ServingNetworkContext(snn=f"5G:{snid}.3gppnetwork.org", snid=snid)
