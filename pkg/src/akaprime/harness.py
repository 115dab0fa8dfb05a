"""Scenario runner: simulated network, fault/adversary injection, traces.

Virtual time is discrete ticks; there is no wall clock anywhere, so a
scenario (seed included) replays to a byte-identical trace. The
adversary is a declarative script over in-flight envelopes, not code.
"""

from __future__ import annotations

import copy
import hashlib
import json
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

from . import provisioning
from .crypto import Autn
from .entities import (
    AmfSeaf,
    Ausf,
    AuthMethod,
    MethodPolicy,
    NetworkType,
    Note,
    ProtocolViolation,
    SubscriberStore,
    Udm,
    Ue,
    UeState,
)
from .identity import MethodHint, derive_snn
from .wire import (
    AuthInfoRequest,
    AuthInfoResponse,
    AuthRequest,
    ChallengeForward,
    ChallengeResponse,
    Envelope,
    FailureNotice,
    IdentityRequest,
    IdentityResponse,
    Interface,
    ResVerifyRequest,
    SuccessNotice,
)


class ScenarioConfigError(Exception):
    pass


class Outcome(Enum):
    SUCCESS = "SUCCESS"
    MAC_FAILURE = "MAC_FAILURE"
    SQN_FAILURE = "SQN_FAILURE"
    HRES_MISMATCH = "HRES_MISMATCH"
    XRES_MISMATCH = "XRES_MISMATCH"
    METHOD_REJECTED = "METHOD_REJECTED"
    TIMEOUT = "TIMEOUT"
    # Extra terminal reasons surfaced by the home network; not part of
    # the core outcome set but reported honestly when they occur.
    SUBSCRIBER_NOT_FOUND = "SUBSCRIBER_NOT_FOUND"
    INTEGRITY_ERROR = "INTEGRITY_ERROR"


# Canonical two-phase procedure steps asserted against faultless traces.
CANONICAL_SEQUENCE = [
    "identity_request",
    "identity_response",
    "auth_request_snn",
    "auth_info_request",
    "method_selected",
    "av_generated",
    "xres_stored_hxres_computed",
    "challenge_rand_autn",
    "auth_response_res",
    "hres_hxres_compare",
    "res_xres_compare",
    "eap_success_k_seaf",
]


def _event_name(env: Envelope) -> str:
    p = env.payload
    if isinstance(p, IdentityRequest):
        return "identity_request"
    if isinstance(p, IdentityResponse):
        return "identity_response"
    if isinstance(p, AuthRequest):
        return "auth_request_snn"
    if isinstance(p, AuthInfoRequest):
        return "auth_info_request"
    if isinstance(p, AuthInfoResponse):
        return "auth_info_response"
    if isinstance(p, ChallengeForward):
        return ("challenge_forward" if env.interface is Interface.N12_AMF_AUSF
                else "challenge_rand_autn")
    if isinstance(p, ChallengeResponse):
        return "auth_response_res"
    if isinstance(p, ResVerifyRequest):
        return "res_verify_request"
    if isinstance(p, SuccessNotice):
        return ("eap_success_k_seaf" if env.interface is Interface.N12_AMF_AUSF
                else "success_forward")
    if isinstance(p, FailureNotice):
        return "failure_notice"
    return type(p).__name__


def _payload_bytes(env: Envelope) -> int:
    """Accounting size of a message: raw crypto fields plus EAP framing."""
    p = env.payload
    n = 0
    eap = getattr(p, "eap", None)
    if eap is not None:
        n += len(eap)
    if isinstance(p, (IdentityResponse, AuthRequest, AuthInfoRequest)):
        n += len(p.identity.encode())
    if isinstance(p, (AuthRequest, AuthInfoRequest)):
        n += len(p.snn.encode())
    if isinstance(p, AuthInfoResponse):
        n += 16 + 16 + len(p.av.xres) + 32
    if isinstance(p, ChallengeForward):
        n += 16 + 16 + (len(p.hxres) if p.hxres else 0)
    if isinstance(p, ChallengeResponse):
        n += len(p.res)
    if isinstance(p, ResVerifyRequest):
        n += len(p.res)
    if isinstance(p, FailureNotice):
        n += len(p.reason.encode())
    return n


@dataclass(frozen=True)
class LinkConfig:
    drop_prob: float = 0.0
    reorder: bool = False
    latency_ticks: int = 0


@dataclass
class AdversaryRule:
    """Declarative in-flight mutation: match + action, fires once by default."""

    match: dict
    action: dict
    fired: int = 0

    def matches(self, env: Envelope) -> bool:
        if self.fired >= int(self.match.get("max_fires", 1)):
            return False
        want_if = self.match.get("interface")
        if want_if and env.interface.value != want_if:
            return False
        want_event = self.match.get("event")
        if want_event and _event_name(env) != want_event:
            return False
        return True


@dataclass(frozen=True)
class TraceEvent:
    tick: int
    session: str
    src: str
    dst: str
    interface: str
    event: str
    digest: str = ""
    info: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({
            "tick": self.tick, "session": self.session, "src": self.src,
            "dst": self.dst, "interface": self.interface, "event": self.event,
            "digest": self.digest, "info": self.info,
        }, sort_keys=True)


def trace_to_jsonl(trace: list[TraceEvent]) -> str:
    return "".join(ev.to_json() + "\n" for ev in trace)


@dataclass
class Scenario:
    subscribers: SubscriberStore
    imsi: str
    serving_mcc: str
    serving_mnc: str
    network_type: NetworkType
    rng_seed: bytes
    expected_outcome: Outcome
    requested_method: AuthMethod | None = AuthMethod.EAP_AKA_PRIME
    ue_method_hint: MethodHint = MethodHint.EAP_AKA_PRIME
    adversary: list = field(default_factory=list)
    faults: dict = field(default_factory=dict)
    tick_budget: int = 1000


def scenario_from_dict(doc: dict, subscribers: SubscriberStore) -> Scenario:
    try:
        sn = doc["serving_network"]
        seed = bytes.fromhex(doc["rng_seed"])
        expected = Outcome(doc["expected_outcome"])
    except (KeyError, ValueError) as exc:
        raise ScenarioConfigError(f"bad scenario document: {exc}") from exc
    imsi = doc.get("imsi")
    if imsi is None:
        records = subscribers.records()
        if not records:
            raise ScenarioConfigError("subscriber store is empty")
        imsi = records[0].supi.imsi
    requested = doc.get("requested_method")
    faults = {}
    for name, cfg in doc.get("faults", {}).items():
        try:
            iface = Interface(name)
        except ValueError as exc:
            raise ScenarioConfigError(f"unknown interface {name!r}") from exc
        faults[iface] = LinkConfig(
            drop_prob=float(cfg.get("drop_prob", 0.0)),
            reorder=bool(cfg.get("reorder", False)),
            latency_ticks=int(cfg.get("latency_ticks", 0)))
    adversary = []
    for rule in doc.get("adversary", []):
        iface = rule.get("match", {}).get("interface")
        if iface is not None and iface not in Interface._value2member_map_:
            raise ScenarioConfigError(f"adversary targets unknown interface {iface!r}")
        adversary.append(AdversaryRule(match=dict(rule.get("match", {})),
                                       action=dict(rule["action"])))
    return Scenario(
        subscribers=subscribers,
        imsi=imsi,
        serving_mcc=str(sn["mcc"]),
        serving_mnc=str(sn["mnc"]),
        network_type=NetworkType(sn.get("network_type", "PUBLIC")),
        rng_seed=seed,
        expected_outcome=expected,
        requested_method=AuthMethod(requested) if requested else None,
        ue_method_hint=MethodHint(doc.get("ue_method_hint", "EAP-AKA'")),
        adversary=adversary,
        faults=faults,
        tick_budget=int(doc.get("tick_budget", 1000)),
    )


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    if not path.exists():
        raise ScenarioConfigError(f"scenario file {path} not found")
    doc = json.loads(path.read_text())
    subs_ref = doc.get("subscribers_file")
    if not subs_ref:
        raise ScenarioConfigError("scenario lacks subscribers_file")
    subs_path = (path.parent / subs_ref).resolve()
    if not subs_path.exists():
        raise ScenarioConfigError(f"subscribers file {subs_path} not found")
    store = provisioning.load_subscribers(subs_path)
    return scenario_from_dict(doc, store)


def _flip_bit(data: bytes, bit: int) -> bytes:
    buf = bytearray(data)
    buf[(bit // 8) % len(buf)] ^= 1 << (bit % 8)
    return bytes(buf)


def _mutate_payload(payload, action: dict):
    fld = action["field"]
    current = getattr(payload, fld)
    raw = current.encode() if isinstance(current, Autn) else current
    if action["type"] == "flip_bit":
        raw = _flip_bit(raw, int(action.get("bit", 0)))
    elif action["type"] == "set_field":
        raw = bytes.fromhex(action["value_hex"])
    else:
        raise ScenarioConfigError(f"unknown mutation {action['type']!r}")
    new = Autn.decode(raw) if isinstance(current, Autn) else raw
    return replace(payload, **{fld: new})


@dataclass
class _Delivery:
    env: Envelope
    src: str
    dst: str
    deliver_tick: int
    seq: int


_ENDPOINTS = {
    Interface.N1_UE_AMF: ("UE", "AMF"),
    Interface.N12_AMF_AUSF: ("AMF", "AUSF"),
    Interface.N13_AUSF_UDM: ("AUSF", "UDM"),
}


@dataclass
class RunResult:
    outcome: Outcome
    trace: list
    stats: dict
    ue: Ue
    amf: AmfSeaf
    ausf: Ausf


def run_scenario(sc: Scenario) -> RunResult:
    store = copy.deepcopy(sc.subscribers)
    sub = store.get(sc.imsi)
    if sub is None:
        raise ScenarioConfigError(f"imsi {sc.imsi} not in subscriber store")
    sn_ctx = derive_snn(sc.serving_mcc, sc.serving_mnc)
    policy = MethodPolicy(network_type=sc.network_type)
    session = "sess-" + hashlib.sha256(sc.rng_seed + sc.imsi.encode()).hexdigest()[:8]

    ue = Ue(sub=sub, sn_ctx=sn_ctx, session_id=session,
            method_hint=sc.ue_method_hint)
    amf = AmfSeaf(sn_ctx=sn_ctx, session_id=session)
    ausf = Ausf(session_id=session)
    udm = Udm(store=store, policy=policy, rng_seed=sc.rng_seed,
              session_id=session, requested_method=sc.requested_method)
    entities = {"UE": ue, "AMF": amf, "AUSF": ausf, "UDM": udm}

    rng = random.Random(int.from_bytes(
        hashlib.sha256(sc.rng_seed + b"net").digest()[:8], "big"))
    rules = [AdversaryRule(match=r.match, action=r.action) for r in sc.adversary]

    pending: list[_Delivery] = []
    trace: list[TraceEvent] = []
    stats = {"sent": 0, "delivered": 0, "dropped": 0, "payload_bytes": 0}
    seq = 0

    def send(env: Envelope, src: str, tick: int) -> None:
        nonlocal seq
        stats["sent"] += 1
        link = sc.faults.get(env.interface, LinkConfig())
        for rule in rules:
            if not rule.matches(env):
                continue
            action = rule.action
            kind = action["type"]
            rule.fired += 1
            if kind == "drop":
                stats["dropped"] += 1
                return
            if kind in ("flip_bit", "set_field"):
                env = Envelope(session_id=env.session_id,
                               interface=env.interface,
                               payload=_mutate_payload(env.payload, action))
            elif kind == "replay":
                seq += 1
                a, b = _ENDPOINTS[env.interface]
                pending.append(_Delivery(
                    env=env, src=src, dst=b if src == a else a,
                    deliver_tick=tick + 1 + link.latency_ticks
                    + int(action.get("delay_ticks", 10)),
                    seq=seq))
            else:
                raise ScenarioConfigError(f"unknown adversary action {kind!r}")
        if link.drop_prob > 0 and rng.random() < link.drop_prob:
            stats["dropped"] += 1
            return
        a, b = _ENDPOINTS[env.interface]
        dst = b if src == a else a
        seq += 1
        order = -seq if link.reorder else seq
        pending.append(_Delivery(env=env, src=src, dst=dst,
                                 deliver_tick=tick + 1 + link.latency_ticks,
                                 seq=order))

    def process_outputs(outs, entity_name: str, tick: int) -> None:
        for out in outs:
            if isinstance(out, Note):
                trace.append(TraceEvent(tick=tick, session=session,
                                        src=entity_name, dst=entity_name,
                                        interface="local", event=out.event,
                                        info=dict(out.info)))
            else:
                send(out, entity_name, tick)

    process_outputs(amf.start(), "AMF", 0)

    tick = 0
    while pending:
        pending.sort(key=lambda d: (d.deliver_tick, d.seq))
        if max(tick, pending[0].deliver_tick) > sc.tick_budget:
            break
        nxt = pending.pop(0)
        tick = max(tick, nxt.deliver_tick)
        stats["delivered"] += 1
        stats["payload_bytes"] += _payload_bytes(nxt.env)
        eap = getattr(nxt.env.payload, "eap", None)
        trace.append(TraceEvent(
            tick=tick, session=session, src=nxt.src, dst=nxt.dst,
            interface=nxt.env.interface.value, event=_event_name(nxt.env),
            digest=eap.hex() if eap is not None else ""))
        try:
            outs = entities[nxt.dst].handle(nxt.env)
        except ProtocolViolation as exc:
            trace.append(TraceEvent(tick=tick, session=session, src=nxt.dst,
                                    dst=nxt.dst, interface="local",
                                    event="protocol_violation",
                                    info={"detail": str(exc)}))
            continue
        process_outputs(outs, nxt.dst, tick)

    stats["message_count"] = stats["delivered"]
    stats["ticks"] = tick
    stats["pending"] = len(pending)

    if ue.state is UeState.AUTHENTICATED:
        outcome = Outcome.SUCCESS
    elif ue.state is UeState.FAILED and ue.failure_reason is not None:
        outcome = Outcome(ue.failure_reason)
    else:
        outcome = Outcome.TIMEOUT
    return RunResult(outcome=outcome, trace=trace, stats=stats,
                     ue=ue, amf=amf, ausf=ausf)


class CompareError(Exception):
    pass


def compare_methods(sc: Scenario) -> dict:
    """Run EAP-AKA' and 5G-AKA from identical initial state and seed.

    Each run gets a fresh copy of the subscriber store, so both see the
    same SQN and draw the same RAND.
    """
    sub = sc.subscribers.get(sc.imsi)
    if sub is None:
        raise CompareError(f"imsi {sc.imsi} not provisioned")
    needed = {AuthMethod.EAP_AKA_PRIME, AuthMethod.FIVE_G_AKA}
    if not needed <= sub.allowed_methods:
        raise CompareError("subscriber must allow both EAP-AKA' and 5G-AKA")
    report = {"imsi": sc.imsi, "rng_seed": sc.rng_seed.hex(), "methods": {}}
    for method in (AuthMethod.EAP_AKA_PRIME, AuthMethod.FIVE_G_AKA):
        result = run_scenario(replace(sc, requested_method=method))
        keys = result.ue.keys
        report["methods"][method.value] = {
            "outcome": result.outcome.value,
            "message_count": result.stats["message_count"],
            "payload_bytes": result.stats["payload_bytes"],
            "ticks": result.stats["ticks"],
            "av_fingerprint": (result.amf.rand[:4].hex()
                               if result.amf.rand else None),
            "k_ausf_fingerprint": keys.k_ausf[:4].hex() if keys else None,
            "k_seaf_fingerprint": keys.k_seaf[:4].hex() if keys else None,
        }
    return report
