"""EAP packet codec and the typed envelopes moved between entities.

Only the EAP payload is byte-exact; envelopes are simulation-level
values serialized as JSON in traces. Attribute TLV layout:

    kind (1B) | total-length-in-4-byte-units (1B) | value-length (2B BE)
    | value | zero padding to a 4-byte boundary

The uniform 2-byte value-length prefix keeps decoding canonical for
every attribute kind, including unknown ones.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass, replace
from enum import Enum, IntEnum

from .crypto import AuthenticationVector, Autn, KeyMaterial, EAP_TYPE_AKA_PRIME
from .identity import Supi

MAX_ATTR_VALUE = 1016  # 255 four-byte units minus the 4 header bytes


class CodecError(ValueError):
    pass


class TruncatedHeader(CodecError):
    pass


class LengthMismatch(CodecError):
    pass


class BadPadding(CodecError):
    pass


class AttributeTooLong(CodecError):
    pass


class EapCode(IntEnum):
    REQUEST = 1
    RESPONSE = 2
    SUCCESS = 3
    FAILURE = 4


class EapSubtype(IntEnum):
    AKA_CHALLENGE = 1
    IDENTITY = 5


class AttrKind(IntEnum):
    AT_RAND = 1
    AT_AUTN = 2
    AT_RES = 3
    AT_MAC = 11
    AT_IDENTITY = 14
    AT_KDF_INPUT = 23
    AT_KDF = 24


@dataclass(frozen=True)
class Attribute:
    kind: int  # AttrKind value, or an unknown registry number
    value: bytes

    def __post_init__(self):
        if self.kind == AttrKind.AT_MAC and len(self.value) != 16:
            raise CodecError("AT_MAC value must be 16 bytes")


@dataclass(frozen=True)
class EapPacket:
    code: EapCode
    identifier: int
    subtype: EapSubtype | None = None
    attributes: tuple[Attribute, ...] = ()
    type_: int | None = None

    def __post_init__(self):
        if self.code in (EapCode.SUCCESS, EapCode.FAILURE):
            if self.subtype is not None or self.attributes or self.type_ is not None:
                raise CodecError("Success/Failure packets carry no body")
        else:
            if self.subtype is None:
                raise CodecError("Request/Response packets need a subtype")
            if self.type_ is None:
                object.__setattr__(self, "type_", EAP_TYPE_AKA_PRIME)


def _encode_attr(attr: Attribute) -> bytes:
    if len(attr.value) > MAX_ATTR_VALUE:
        raise AttributeTooLong(f"attribute value of {len(attr.value)} bytes")
    pad = (-(4 + len(attr.value))) % 4
    total = 4 + len(attr.value) + pad
    return bytes([attr.kind, total // 4]) + len(attr.value).to_bytes(2, "big") \
        + attr.value + bytes(pad)


def encode_eap(p: EapPacket) -> bytes:
    body = b""
    if p.code in (EapCode.REQUEST, EapCode.RESPONSE):
        body = bytes([p.type_, p.subtype, 0, 0])
        for attr in p.attributes:
            body += _encode_attr(attr)
    length = 4 + len(body)
    return bytes([p.code, p.identifier]) + length.to_bytes(2, "big") + body


def decode_eap(raw: bytes) -> EapPacket:
    if len(raw) < 4:
        raise TruncatedHeader(f"{len(raw)} bytes, need at least 4")
    code, identifier = raw[0], raw[1]
    length = int.from_bytes(raw[2:4], "big")
    if length != len(raw):
        raise LengthMismatch(f"length field {length}, buffer {len(raw)}")
    try:
        code = EapCode(code)
    except ValueError as exc:
        raise CodecError(f"unknown EAP code {code}") from exc
    if code in (EapCode.SUCCESS, EapCode.FAILURE):
        if length != 4:
            raise LengthMismatch("Success/Failure must have length 4")
        return EapPacket(code=code, identifier=identifier)
    if length < 8:
        raise TruncatedHeader("method packets need type/subtype/reserved")
    type_, subtype = raw[4], raw[5]
    if raw[6:8] != b"\x00\x00":
        raise BadPadding("reserved bytes must be zero")
    attrs = []
    off = 8
    while off < length:
        if length - off < 4:
            raise TruncatedHeader("truncated attribute header")
        kind, units = raw[off], raw[off + 1]
        total = units * 4
        if total < 4 or off + total > length:
            raise LengthMismatch("attribute overruns packet")
        vlen = int.from_bytes(raw[off + 2:off + 4], "big")
        if 4 + vlen > total:
            raise LengthMismatch("attribute value overruns attribute")
        if total - 4 - vlen >= 4:
            raise BadPadding("non-canonical attribute padding length")
        value = raw[off + 4:off + 4 + vlen]
        if any(raw[off + 4 + vlen:off + total]):
            raise BadPadding("attribute padding must be zero")
        attrs.append(Attribute(kind=kind, value=value))
        off += total
    try:
        subtype = EapSubtype(subtype)
    except ValueError as exc:
        raise CodecError(f"unknown subtype {subtype}") from exc
    return EapPacket(code=code, identifier=identifier,
                     subtype=subtype, attributes=tuple(attrs),
                     type_=type_)


def _with_mac(p: EapPacket, mac: bytes) -> EapPacket:
    attrs = []
    seen = False
    for attr in p.attributes:
        if attr.kind == AttrKind.AT_MAC:
            attrs.append(Attribute(kind=attr.kind, value=mac))
            seen = True
        else:
            attrs.append(attr)
    if not seen:
        raise CodecError("packet has no AT_MAC attribute")
    return replace(p, attributes=tuple(attrs))


def seal_mac(p: EapPacket, k_aut: bytes) -> EapPacket:
    zeroed = _with_mac(p, bytes(16))
    mac = hmac.new(k_aut, encode_eap(zeroed), hashlib.sha256).digest()[:16]
    return _with_mac(p, mac)


def verify_mac(p: EapPacket, k_aut: bytes) -> bool:
    mac = next((a.value for a in p.attributes if a.kind == AttrKind.AT_MAC), None)
    if mac is None:
        return False
    expected = hmac.new(k_aut, encode_eap(_with_mac(p, bytes(16))),
                        hashlib.sha256).digest()[:16]
    return hmac.compare_digest(mac, expected)


class Interface(Enum):
    N1_UE_AMF = "N1_UE_AMF"
    N12_AMF_AUSF = "N12_AMF_AUSF"
    N13_AUSF_UDM = "N13_AUSF_UDM"
    N6_DNAAA = "N6_DNAAA"


@dataclass(frozen=True)
class IdentityRequest:
    pass


@dataclass(frozen=True)
class IdentityResponse:
    identity: str


@dataclass(frozen=True)
class AuthRequest:
    identity: str
    snn: str


@dataclass(frozen=True)
class AuthInfoRequest:
    identity: str
    snn: str


@dataclass(frozen=True)
class AuthInfoResponse:
    av: AuthenticationVector
    key_material: KeyMaterial  # home-side MK expansion incl. k_ausf
    method: str
    supi: Supi


@dataclass(frozen=True)
class ChallengeForward:
    rand: bytes
    autn: Autn
    hxres: bytes | None
    eap: bytes | None


@dataclass(frozen=True)
class ChallengeResponse:
    res: bytes
    eap: bytes | None


@dataclass(frozen=True)
class ResVerifyRequest:
    res: bytes
    supi: Supi
    snn: str
    eap: bytes | None


@dataclass(frozen=True)
class SuccessNotice:
    k_seaf: bytes | None
    eap: bytes | None


@dataclass(frozen=True)
class FailureNotice:
    reason: str


# Which payload variants may travel on which simulated interface.
_LEGAL_PAYLOADS = {
    Interface.N1_UE_AMF: (IdentityRequest, IdentityResponse, ChallengeForward,
                          ChallengeResponse, SuccessNotice, FailureNotice),
    Interface.N12_AMF_AUSF: (AuthRequest, ChallengeForward, ResVerifyRequest,
                             SuccessNotice, FailureNotice),
    Interface.N13_AUSF_UDM: (AuthInfoRequest, AuthInfoResponse, FailureNotice),
    Interface.N6_DNAAA: (SuccessNotice, FailureNotice),
}


class EnvelopeError(ValueError):
    pass


@dataclass(frozen=True)
class Envelope:
    session_id: str
    interface: Interface
    payload: object

    def __post_init__(self):
        if not isinstance(self.payload, _LEGAL_PAYLOADS[self.interface]):
            raise EnvelopeError(
                f"{type(self.payload).__name__} not legal on {self.interface.value}")
        if self.interface is Interface.N1_UE_AMF:
            # UE must never see HXRES or the anchor key.
            if isinstance(self.payload, ChallengeForward) and self.payload.hxres is not None:
                raise EnvelopeError("hxres must not appear on N1")
            if isinstance(self.payload, SuccessNotice) and self.payload.k_seaf is not None:
                raise EnvelopeError("k_seaf must not appear on N1")
        if self.interface is Interface.N12_AMF_AUSF:
            if isinstance(self.payload, ChallengeForward) and self.payload.hxres is None:
                raise EnvelopeError("N12 challenge forward requires hxres")
