"""UE, AMF/SEAF, AUSF and UDM state machines for the two-phase flow.

SEAF is co-located with the AMF. Entities exchange typed envelopes and
emit Note records for the decisions that do not travel on a wire
(method selection, AV generation, the two response comparisons); the
harness turns both into trace events.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

from . import crypto, identity, wire
from .crypto import RootCredential
from .identity import (
    MethodHint,
    REALM_RE,
    SuciScheme,
    Supi,
    ServingNetworkContext,
    build_nai,
    conceal_supi,
    deconceal_suci,
    format_suci,
    parse_nai,
    parse_suci_string,
)
from .wire import (
    AttrKind,
    Attribute,
    AuthInfoRequest,
    AuthInfoResponse,
    AuthRequest,
    ChallengeForward,
    ChallengeResponse,
    EapCode,
    EapPacket,
    EapSubtype,
    Envelope,
    FailureNotice,
    IdentityRequest,
    IdentityResponse,
    Interface,
    ResVerifyRequest,
    SuccessNotice,
    decode_eap,
    encode_eap,
    seal_mac,
    verify_mac,
)


class ProtocolViolation(Exception):
    """An envelope arrived in a state that does not accept it."""


class ValidationError(Exception):
    pass


class SubscriberNotFound(Exception):
    pass


class MethodRejected(Exception):
    pass


# Failure reasons carried in FailureNotice envelopes; the harness maps
# these onto scenario outcomes.
MAC_FAILURE = "MAC_FAILURE"
SQN_FAILURE = "SQN_FAILURE"
HRES_MISMATCH = "HRES_MISMATCH"
XRES_MISMATCH = "XRES_MISMATCH"
METHOD_REJECTED = "METHOD_REJECTED"
SUBSCRIBER_NOT_FOUND = "SUBSCRIBER_NOT_FOUND"
INTEGRITY_ERROR = "INTEGRITY_ERROR"


class AuthMethod(Enum):
    FIVE_G_AKA = "5G-AKA"
    EAP_AKA_PRIME = "EAP-AKA'"
    EAP_SIM = "EAP-SIM"
    EAP_TLS = "EAP-TLS"
    EAP_TTLS = "EAP-TTLS"


class NetworkType(Enum):
    PUBLIC = "PUBLIC"
    PRIVATE = "PRIVATE"


@dataclass(frozen=True)
class MethodInfo:
    method: AuthMethod
    public_allowed: bool
    credential_type: str


# Method metadata table; only 5G-AKA and EAP-AKA' are valid on public
# networks, the rest stay private-network alternatives.
METHOD_REGISTRY = {
    AuthMethod.FIVE_G_AKA: MethodInfo(AuthMethod.FIVE_G_AKA, True, "USIM"),
    AuthMethod.EAP_AKA_PRIME: MethodInfo(AuthMethod.EAP_AKA_PRIME, True, "USIM"),
    AuthMethod.EAP_SIM: MethodInfo(AuthMethod.EAP_SIM, False, "SIM"),
    AuthMethod.EAP_TLS: MethodInfo(AuthMethod.EAP_TLS, False, "certificate"),
    AuthMethod.EAP_TTLS: MethodInfo(AuthMethod.EAP_TTLS, False,
                                    "certificate+password"),
}

# Selection preference when several methods are permitted.
_METHOD_PREFERENCE = [AuthMethod.EAP_AKA_PRIME, AuthMethod.FIVE_G_AKA,
                      AuthMethod.EAP_TLS, AuthMethod.EAP_TTLS,
                      AuthMethod.EAP_SIM]


@dataclass(frozen=True)
class MethodPolicy:
    network_type: NetworkType
    registry: dict = field(default_factory=lambda: dict(METHOD_REGISTRY))

    def permits(self, method: AuthMethod) -> bool:
        info = self.registry.get(method)
        if info is None:
            return False
        if self.network_type is NetworkType.PUBLIC:
            return info.public_allowed
        return True


def udm_select_method(sub: "SubscriberRecord", policy: MethodPolicy,
                      requested: AuthMethod | None = None) -> AuthMethod:
    candidates = sub.allowed_methods
    if requested is not None:
        candidates = candidates & {requested}
    for method in _METHOD_PREFERENCE:
        if method in candidates and policy.permits(method):
            return method
    raise MethodRejected(
        f"no permissible method among {sorted(m.value for m in sub.allowed_methods)}")


@dataclass
class SubscriberRecord:
    supi: Supi
    cred: RootCredential
    allowed_methods: frozenset
    realm: str
    concealment_scheme: SuciScheme = SuciScheme.NULL
    home_key: bytes = bytes(32)

    def __post_init__(self):
        if not self.allowed_methods:
            raise ValidationError("allowed_methods must be non-empty")
        if not REALM_RE.match(self.realm):
            raise ValidationError(f"realm {self.realm!r} violates grammar")


class SubscriberStore:
    """In-memory subscriber table; SQN updates go through bump_sqn."""

    def __init__(self, records=()):
        self._by_imsi: dict[str, SubscriberRecord] = {}
        for rec in records:
            self.add(rec)

    def add(self, rec: SubscriberRecord) -> None:
        self._by_imsi[rec.supi.imsi] = rec

    def get(self, imsi: str) -> SubscriberRecord | None:
        return self._by_imsi.get(imsi)

    def records(self):
        return list(self._by_imsi.values())

    def bump_sqn(self, imsi: str, new_sqn: int) -> None:
        rec = self._by_imsi[imsi]
        rec.cred = replace(rec.cred, sqn=new_sqn)

    def __len__(self):
        return len(self._by_imsi)


@dataclass(frozen=True)
class Note:
    """A traced decision that does not correspond to a sent envelope."""

    event: str
    info: dict = field(default_factory=dict)


class UeState(Enum):
    IDLE = "IDLE"
    AWAIT_CHALLENGE = "AWAIT_CHALLENGE"
    AUTHENTICATED = "AUTHENTICATED"
    FAILED = "FAILED"


class AmfState(Enum):
    IDLE = "IDLE"
    AWAIT_AV = "AWAIT_AV"
    AWAIT_UE_RESPONSE = "AWAIT_UE_RESPONSE"
    AWAIT_AUSF_VERDICT = "AWAIT_AUSF_VERDICT"
    DONE = "DONE"
    FAILED = "FAILED"


class AusfState(Enum):
    IDLE = "IDLE"
    AWAIT_UDM = "AWAIT_UDM"
    AWAIT_RES = "AWAIT_RES"
    DONE = "DONE"
    FAILED = "FAILED"


def _guard(condition: bool, message: str) -> None:
    if not condition:
        raise ProtocolViolation(message)


class Ue:
    """User equipment side of the authentication run."""

    name = "UE"

    def __init__(self, sub: SubscriberRecord, sn_ctx: ServingNetworkContext,
                 session_id: str, method_hint: MethodHint = MethodHint.EAP_AKA_PRIME,
                 suci_nonce: bytes = b"\x0a" * 16):
        self.sub = sub
        self.sn_ctx = sn_ctx
        self.session_id = session_id
        self.method_hint = method_hint
        self.suci_nonce = suci_nonce
        self.state = UeState.IDLE
        self.identity_sent = ""
        self.keys: crypto.KeyMaterial | None = None
        self.stored_sqn = sub.cred.sqn - 1
        self.failure_reason: str | None = None
        self._pending_keys: crypto.KeyMaterial | None = None

    def handle(self, env: Envelope):
        payload = env.payload
        if isinstance(payload, IdentityRequest):
            return self.on_identity_request()
        if isinstance(payload, ChallengeForward):
            return self.on_challenge(payload)
        if isinstance(payload, SuccessNotice):
            return self.on_success(payload)
        if isinstance(payload, FailureNotice):
            return self.on_failure(payload)
        raise ProtocolViolation(f"UE cannot handle {type(payload).__name__}")

    def _n1(self, payload) -> Envelope:
        return Envelope(session_id=self.session_id,
                        interface=Interface.N1_UE_AMF, payload=payload)

    def on_identity_request(self):
        _guard(self.state is UeState.IDLE,
               f"identity request in state {self.state.value}")
        if self.sub.concealment_scheme is SuciScheme.NULL:
            ident = build_nai(self.sub.supi, self.method_hint).full
        else:
            suci = conceal_supi(self.sub.supi, self.sub.home_key,
                                self.suci_nonce, self.sub.concealment_scheme)
            ident = format_suci(suci)
        self.identity_sent = ident
        self.state = UeState.AWAIT_CHALLENGE
        return [self._n1(IdentityResponse(identity=ident))]

    def _fail(self, reason: str):
        self.state = UeState.FAILED
        self.failure_reason = reason
        self.keys = None
        self._pending_keys = None
        return [self._n1(FailureNotice(reason=reason))]

    def on_challenge(self, payload: ChallengeForward):
        _guard(self.state in (UeState.AWAIT_CHALLENGE, UeState.AUTHENTICATED),
               f"challenge in state {self.state.value}")
        cred = self.sub.cred
        usim = crypto.usim_functions(cred, payload.rand)
        sqn = crypto.recover_sqn(payload.autn, usim.ak)
        # MAC-A covers the AMF field as received in AUTN, so tampering
        # with any AUTN byte shows up here.
        expected_mac = crypto.usim_functions(
            replace(cred, sqn=sqn, amf_field=payload.autn.amf_field),
            payload.rand).mac_a
        if expected_mac != payload.autn.mac_a:
            return self._fail(MAC_FAILURE)
        if sqn <= self.stored_sqn:
            return self._fail(SQN_FAILURE)
        ck_prime, ik_prime = crypto.derive_ck_ik_prime(
            usim.ck, usim.ik, self.sn_ctx.snn, payload.autn.sqn_xor_ak)
        keys = crypto.derive_master_keys(ck_prime, ik_prime,
                                         self.identity_sent, payload.rand,
                                         payload.autn)
        eap_out = None
        if payload.eap is not None:
            request = decode_eap(payload.eap)
            if not verify_mac(request, keys.k_aut):
                return self._fail(MAC_FAILURE)
            response = EapPacket(
                code=EapCode.RESPONSE, identifier=request.identifier,
                subtype=EapSubtype.AKA_CHALLENGE,
                attributes=(Attribute(AttrKind.AT_RES, usim.xres),
                            Attribute(AttrKind.AT_MAC, bytes(16))))
            eap_out = encode_eap(seal_mac(response, keys.k_aut))
        self.stored_sqn = sqn
        self._pending_keys = replace(
            keys, k_seaf=crypto.derive_k_seaf(keys.k_ausf, self.sn_ctx.snn))
        return [self._n1(ChallengeResponse(res=usim.xres, eap=eap_out))]

    def on_success(self, payload: SuccessNotice):
        _guard(self.state is UeState.AWAIT_CHALLENGE,
               f"success notice in state {self.state.value}")
        _guard(self._pending_keys is not None, "success before challenge")
        self.keys = self._pending_keys
        self.state = UeState.AUTHENTICATED
        return []

    def on_failure(self, payload: FailureNotice):
        self.state = UeState.FAILED
        self.failure_reason = payload.reason
        self.keys = None
        self._pending_keys = None
        return []


class AmfSeaf:
    """Serving-network AMF with the SEAF role co-located."""

    name = "AMF"

    def __init__(self, sn_ctx: ServingNetworkContext, session_id: str):
        self.sn_ctx = sn_ctx
        self.session_id = session_id
        self.state = AmfState.IDLE
        self.identity = ""
        self.hxres: bytes | None = None
        self.rand: bytes | None = None
        self.k_seaf: bytes | None = None
        self.failure_reason: str | None = None

    def handle(self, env: Envelope):
        payload = env.payload
        if env.interface is Interface.N1_UE_AMF:
            if isinstance(payload, IdentityResponse):
                return self.on_identity_response(payload)
            if isinstance(payload, ChallengeResponse):
                return self.on_auth_response(payload)
            if isinstance(payload, FailureNotice):
                return self.on_ue_failure(payload)
        if env.interface is Interface.N12_AMF_AUSF:
            if isinstance(payload, ChallengeForward):
                return self.issue_challenge(payload)
            if isinstance(payload, SuccessNotice):
                return self.forward_success(payload)
            if isinstance(payload, FailureNotice):
                return self.forward_failure(payload)
        raise ProtocolViolation(f"AMF cannot handle {type(payload).__name__}")

    def _n1(self, payload) -> Envelope:
        return Envelope(session_id=self.session_id,
                        interface=Interface.N1_UE_AMF, payload=payload)

    def _n12(self, payload) -> Envelope:
        return Envelope(session_id=self.session_id,
                        interface=Interface.N12_AMF_AUSF, payload=payload)

    def start(self):
        _guard(self.state is AmfState.IDLE, "session already started")
        return [self._n1(IdentityRequest())]

    def on_identity_response(self, payload: IdentityResponse):
        _guard(self.state is AmfState.IDLE,
               f"identity response in state {self.state.value}")
        if not payload.identity:
            raise ValidationError("empty identity")
        self.identity = payload.identity
        self.state = AmfState.AWAIT_AV
        return [self._n12(AuthRequest(identity=payload.identity,
                                      snn=self.sn_ctx.snn))]

    def issue_challenge(self, payload: ChallengeForward):
        _guard(self.state is AmfState.AWAIT_AV,
               f"AV delivery in state {self.state.value}")
        self.hxres = payload.hxres
        self.rand = payload.rand
        self.state = AmfState.AWAIT_UE_RESPONSE
        return [self._n1(ChallengeForward(rand=payload.rand, autn=payload.autn,
                                          hxres=None, eap=payload.eap))]

    def on_auth_response(self, payload: ChallengeResponse):
        _guard(self.state is AmfState.AWAIT_UE_RESPONSE,
               f"auth response in state {self.state.value}")
        if payload.eap is not None:
            packet = decode_eap(payload.eap)
            if not any(a.kind == AttrKind.AT_RES for a in packet.attributes):
                raise ValidationError("response packet lacks AT_RES")
        hres = crypto.hashed_response(self.rand, payload.res)
        matched = hres == self.hxres
        note = Note("hres_hxres_compare", {"matched": matched})
        if not matched:
            self.state = AmfState.FAILED
            self.failure_reason = HRES_MISMATCH
            return [note, self._n1(FailureNotice(reason=HRES_MISMATCH))]
        supi = None
        if "@" in self.identity:
            try:
                supi = parse_nai(self.identity).to_supi()
            except identity.IdentityError:
                supi = None
        self.state = AmfState.AWAIT_AUSF_VERDICT
        return [note, self._n12(ResVerifyRequest(res=payload.res, supi=supi,
                                                 snn=self.sn_ctx.snn,
                                                 eap=payload.eap))]

    def forward_success(self, payload: SuccessNotice):
        _guard(self.state is AmfState.AWAIT_AUSF_VERDICT,
               f"verdict in state {self.state.value}")
        self.k_seaf = payload.k_seaf
        self.state = AmfState.DONE
        return [self._n1(SuccessNotice(k_seaf=None, eap=payload.eap))]

    def forward_failure(self, payload: FailureNotice):
        self.state = AmfState.FAILED
        self.failure_reason = payload.reason
        return [self._n1(payload)]

    def on_ue_failure(self, payload: FailureNotice):
        self.state = AmfState.FAILED
        self.failure_reason = payload.reason
        return []


class Ausf:
    """Home-network AUSF: stores XRES, computes HXRES, verifies RES."""

    name = "AUSF"

    def __init__(self, session_id: str):
        self.session_id = session_id
        self.state = AusfState.IDLE
        self.identity = ""
        self.snn = ""
        self.method: AuthMethod | None = None
        self.xres: bytes | None = None
        self.rand: bytes | None = None
        self.key_material: crypto.KeyMaterial | None = None
        self.supi: Supi | None = None
        self.k_seaf: bytes | None = None
        self.failure_reason: str | None = None

    def handle(self, env: Envelope):
        payload = env.payload
        if isinstance(payload, AuthRequest):
            return self.on_auth_request(payload)
        if isinstance(payload, AuthInfoResponse):
            return self.process_av(payload)
        if isinstance(payload, ResVerifyRequest):
            return self.verify_res(payload)
        if isinstance(payload, FailureNotice):
            return self.on_udm_failure(payload)
        raise ProtocolViolation(f"AUSF cannot handle {type(payload).__name__}")

    def _n12(self, payload) -> Envelope:
        return Envelope(session_id=self.session_id,
                        interface=Interface.N12_AMF_AUSF, payload=payload)

    def _n13(self, payload) -> Envelope:
        return Envelope(session_id=self.session_id,
                        interface=Interface.N13_AUSF_UDM, payload=payload)

    def on_auth_request(self, payload: AuthRequest):
        _guard(self.state is AusfState.IDLE,
               f"auth request in state {self.state.value}")
        self.identity = payload.identity
        self.snn = payload.snn
        self.state = AusfState.AWAIT_UDM
        return [self._n13(AuthInfoRequest(identity=payload.identity,
                                          snn=payload.snn))]

    def process_av(self, payload: AuthInfoResponse):
        _guard(self.state is AusfState.AWAIT_UDM,
               f"AV in state {self.state.value}")
        av = payload.av
        self.xres = av.xres
        self.rand = av.rand
        self.key_material = payload.key_material
        self.supi = payload.supi
        self.method = AuthMethod(payload.method)
        hxres = crypto.hashed_response(av.rand, av.xres)
        eap_bytes = None
        if self.method is AuthMethod.EAP_AKA_PRIME:
            challenge = EapPacket(
                code=EapCode.REQUEST, identifier=1,
                subtype=EapSubtype.AKA_CHALLENGE,
                attributes=(Attribute(AttrKind.AT_RAND, av.rand),
                            Attribute(AttrKind.AT_AUTN, av.autn.encode()),
                            Attribute(AttrKind.AT_KDF, b"\x00\x01"),
                            Attribute(AttrKind.AT_KDF_INPUT,
                                      self.snn.encode("ascii")),
                            Attribute(AttrKind.AT_MAC, bytes(16))))
            eap_bytes = encode_eap(seal_mac(challenge,
                                            self.key_material.k_aut))
        self.state = AusfState.AWAIT_RES
        return [Note("xres_stored_hxres_computed"),
                self._n12(ChallengeForward(rand=av.rand, autn=av.autn,
                                           hxres=hxres, eap=eap_bytes))]

    def verify_res(self, payload: ResVerifyRequest):
        _guard(self.state is AusfState.AWAIT_RES,
               f"res verify in state {self.state.value}")
        matched = payload.res == self.xres
        note = Note("res_xres_compare", {"matched": matched})
        if not matched:
            self.state = AusfState.FAILED
            self.failure_reason = XRES_MISMATCH
            return [note, self._n12(FailureNotice(reason=XRES_MISMATCH))]
        self.k_seaf = crypto.derive_k_seaf(self.key_material.k_ausf, self.snn)
        eap = None
        if self.method is AuthMethod.EAP_AKA_PRIME:
            eap = encode_eap(EapPacket(code=EapCode.SUCCESS, identifier=2))
        self.state = AusfState.DONE
        return [note, self._n12(SuccessNotice(k_seaf=self.k_seaf, eap=eap))]

    def on_udm_failure(self, payload: FailureNotice):
        self.state = AusfState.FAILED
        self.failure_reason = payload.reason
        return [self._n12(payload)]


class Udm:
    """Home-network UDM: identity resolution, method choice, AV generation."""

    name = "UDM"

    def __init__(self, store: SubscriberStore, policy: MethodPolicy,
                 rng_seed: bytes, session_id: str,
                 requested_method: AuthMethod | None = None):
        self.store = store
        self.policy = policy
        self.rng_seed = rng_seed
        self.session_id = session_id
        self.requested_method = requested_method

    def handle(self, env: Envelope):
        payload = env.payload
        if isinstance(payload, AuthInfoRequest):
            return self.on_auth_info_request(payload)
        raise ProtocolViolation(f"UDM cannot handle {type(payload).__name__}")

    def _n13(self, payload) -> Envelope:
        return Envelope(session_id=self.session_id,
                        interface=Interface.N13_AUSF_UDM, payload=payload)

    def _resolve(self, transmitted: str) -> SubscriberRecord:
        if transmitted.startswith("suci-"):
            suci = parse_suci_string(transmitted)
            integrity_failure = None
            for rec in self.store.records():
                if (rec.supi.mcc, rec.supi.mnc) != (suci.mcc, suci.mnc):
                    continue
                try:
                    supi = deconceal_suci(suci, rec.home_key)
                except identity.IntegrityError as exc:
                    integrity_failure = exc
                    continue
                if supi == rec.supi:
                    return rec
            if integrity_failure is not None:
                raise integrity_failure
            raise SubscriberNotFound("no subscriber matches SUCI")
        nai = parse_nai(transmitted)
        rec = self.store.get(nai.imsi)
        if rec is None:
            raise SubscriberNotFound(f"imsi {nai.imsi} not provisioned")
        return rec

    def on_auth_info_request(self, payload: AuthInfoRequest):
        try:
            rec = self._resolve(payload.identity)
        except SubscriberNotFound:
            return [self._n13(FailureNotice(reason=SUBSCRIBER_NOT_FOUND))]
        except identity.IntegrityError:
            return [self._n13(FailureNotice(reason=INTEGRITY_ERROR))]
        except identity.IdentityError:
            return [self._n13(FailureNotice(reason=SUBSCRIBER_NOT_FOUND))]
        try:
            method = udm_select_method(rec, self.policy, self.requested_method)
        except MethodRejected:
            return [self._n13(FailureNotice(reason=METHOD_REJECTED))]
        av, next_sqn = crypto.generate_av(rec.cred, payload.snn, self.rng_seed)
        self.store.bump_sqn(rec.supi.imsi, next_sqn)
        key_material = crypto.derive_master_keys(
            av.ck_prime, av.ik_prime, payload.identity, av.rand, av.autn)
        return [Note("method_selected", {"method": method.value}),
                Note("av_generated", {"sqn": next_sqn - 1}),
                self._n13(AuthInfoResponse(av=av, key_material=key_material,
                                           method=method.value,
                                           supi=rec.supi))]
