"""Eduroam-style AAA decision layer: realm routing and accept/reject logs.

RADIUS is modeled as an in-process decision engine; only the decision
log lines follow the real server's format. No UDP wire protocol.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from . import harness
from .entities import AuthMethod, SubscriberStore
from .harness import Outcome, Scenario
from .identity import IdentityError, MethodHint, Nai, parse_nai

STATION_ID_RE = re.compile(r"^([0-9A-Fa-f]{2}-){5}[0-9A-Fa-f]{2}$")

DEFAULT_SERVER_NAME = "eduroam01.ufpe.br"
DEFAULT_SERVER_IP = "150.161.50.4"


class NoRoute(Exception):
    pass


class Backend(Enum):
    LOCAL_5GC = "LOCAL_5GC"
    PROXY = "PROXY"


@dataclass(frozen=True)
class RealmPolicy:
    pattern: str  # exact realm, or "*.suffix" wildcard
    supported_methods: frozenset
    backend: Backend = Backend.LOCAL_5GC
    proxy_target: str | None = None

    @property
    def tld(self) -> str:
        """Top realm label, substituted for the redacted part of reject logs."""
        return self.pattern.rsplit(".", 1)[-1]

    def matches(self, realm: str) -> bool:
        if self.pattern.startswith("*."):
            return realm.endswith(self.pattern[1:])
        return realm == self.pattern

    @property
    def suffix_length(self) -> int:
        return len(self.pattern[2:] if self.pattern.startswith("*.")
                   else self.pattern)


@dataclass(frozen=True)
class AccessRequest:
    nai: str
    station_id: str
    source: str = "_self_"


class Verdict(Enum):
    ACCEPT = "ACCEPT"
    REJECT = "REJECT"


@dataclass(frozen=True)
class AccessDecision:
    verdict: Verdict
    reason: str
    log_line: str


def route_request(nai: str, table: list[RealmPolicy]) -> RealmPolicy:
    """Longest-suffix realm match; ties break by declaration order."""
    realm = parse_nai(nai).realm
    best = None
    for policy in table:
        if policy.matches(realm):
            if best is None or policy.suffix_length > best.suffix_length:
                best = policy
    if best is None:
        raise NoRoute(f"no realm policy matches {realm!r}")
    return best


def _log_line(verdict: Verdict, req: AccessRequest, reason: str,
              server: str, ip: str) -> str:
    word = "Access-Accept" if verdict is Verdict.ACCEPT else "Access-Reject"
    return (f"{word} for user {req.nai} stationid {req.station_id} "
            f"from {req.source} ({reason}) to {server} ({ip})")


def authenticate_federated(req: AccessRequest, table: list[RealmPolicy],
                           backend_runner,
                           server_name: str = DEFAULT_SERVER_NAME,
                           server_ip: str = DEFAULT_SERVER_IP) -> AccessDecision:
    """Route, gate on method support, then delegate to the 5GC backend.

    backend_runner(nai: Nai, hint: MethodHint) -> harness.Outcome; it is
    only invoked when the realm policy supports the hinted method.
    """
    def reject(reason: str) -> AccessDecision:
        return AccessDecision(
            verdict=Verdict.REJECT, reason=reason,
            log_line=_log_line(Verdict.REJECT, req, reason, server_name,
                               server_ip))

    if not STATION_ID_RE.match(req.station_id):
        return reject("malformed identity")
    try:
        nai = parse_nai(req.nai)
    except IdentityError:
        return reject("malformed identity")
    try:
        policy = route_request(req.nai, table)
    except NoRoute:
        return reject("unknown realm")
    if nai.method_hint not in policy.supported_methods:
        reason = (f"Misconfigured client: Unsupported 3G "
                  f"{nai.method_hint.value} client! Rejected by {policy.tld}.")
        return reject(reason)
    outcome = backend_runner(nai, nai.method_hint)
    if outcome is Outcome.SUCCESS:
        reason = f"authenticated via {nai.method_hint.value}"
        return AccessDecision(
            verdict=Verdict.ACCEPT, reason=reason,
            log_line=_log_line(Verdict.ACCEPT, req, reason, server_name,
                               server_ip))
    return reject(f"authentication failed: {outcome.value}")


_HINT_TO_METHOD = {
    MethodHint.EAP_AKA_PRIME: AuthMethod.EAP_AKA_PRIME,
    MethodHint.EAP_SIM: AuthMethod.EAP_SIM,
}


def local_5gc_backend(subscribers: SubscriberStore, serving_mcc: str,
                      serving_mnc: str, rng_seed: bytes,
                      run_log: list | None = None):
    """Backend runner that drives a full authentication run per request.

    run_log, when given, collects each RunResult for trace inspection.
    """
    def run(nai: Nai, hint: MethodHint) -> Outcome:
        sc = Scenario(
            subscribers=subscribers,
            imsi=nai.imsi,
            serving_mcc=serving_mcc,
            serving_mnc=serving_mnc,
            network_type=harness.NetworkType.PUBLIC,
            rng_seed=rng_seed,
            expected_outcome=Outcome.SUCCESS,
            requested_method=_HINT_TO_METHOD.get(hint),
            ue_method_hint=hint,
        )
        try:
            result = harness.run_scenario(sc)
        except harness.ScenarioConfigError:
            return Outcome.SUBSCRIBER_NOT_FOUND
        if run_log is not None:
            run_log.append(result)
        return result.outcome

    return run
