"""Subscriber file handling and deterministic test provisioning."""

from __future__ import annotations

import hashlib
import hmac
import json
from pathlib import Path

from .crypto import RootCredential
from .entities import AuthMethod, SubscriberRecord, SubscriberStore
from .identity import SuciScheme, Supi, realm_for


class ProvisioningError(Exception):
    pass


def record_to_dict(rec: SubscriberRecord) -> dict:
    return {
        "mcc": rec.supi.mcc,
        "mnc": rec.supi.mnc,
        "msin": rec.supi.msin,
        "k_hex": rec.cred.k.hex(),
        "sqn": rec.cred.sqn,
        "amf_field_hex": rec.cred.amf_field.hex(),
        "allowed_methods": sorted(m.value for m in rec.allowed_methods),
        "realm": rec.realm,
        "concealment": {
            "scheme": rec.concealment_scheme.value,
            "home_key_hex": rec.home_key.hex(),
        },
    }


def record_from_dict(doc: dict) -> SubscriberRecord:
    try:
        supi = Supi(mcc=doc["mcc"], mnc=doc["mnc"], msin=doc["msin"])
        cred = RootCredential(k=bytes.fromhex(doc["k_hex"]),
                              sqn=int(doc["sqn"]),
                              amf_field=bytes.fromhex(doc["amf_field_hex"]))
        methods = frozenset(AuthMethod(m) for m in doc["allowed_methods"])
        conceal = doc.get("concealment", {})
        return SubscriberRecord(
            supi=supi, cred=cred, allowed_methods=methods,
            realm=doc["realm"],
            concealment_scheme=SuciScheme(conceal.get("scheme", "NULL")),
            home_key=bytes.fromhex(conceal.get("home_key_hex", "00" * 32)))
    except (KeyError, ValueError) as exc:
        raise ProvisioningError(f"bad subscriber record: {exc}") from exc


def store_to_dict(store: SubscriberStore) -> dict:
    return {"subscribers": [record_to_dict(r) for r in store.records()]}


def store_from_dict(doc: dict) -> SubscriberStore:
    return SubscriberStore(record_from_dict(d)
                           for d in doc.get("subscribers", []))


def save_subscribers(store: SubscriberStore, path: str | Path) -> None:
    text = json.dumps(store_to_dict(store), indent=2, sort_keys=True) + "\n"
    Path(path).write_text(text)


def load_subscribers(path: str | Path) -> SubscriberStore:
    path = Path(path)
    if not path.exists():
        raise ProvisioningError(f"subscribers file {path} not found")
    return store_from_dict(json.loads(path.read_text()))


def generate_subscribers(n: int, seed: bytes, mcc: str = "001",
                         mnc: str = "01",
                         methods=(AuthMethod.EAP_AKA_PRIME,
                                  AuthMethod.FIVE_G_AKA),
                         scheme: SuciScheme = SuciScheme.NULL) -> SubscriberStore:
    """Derive n distinct subscribers deterministically from the seed."""
    if n < 1:
        raise ProvisioningError("n must be >= 1")
    msin_len = 15 - len(mcc) - len(mnc)
    store = SubscriberStore()
    for i in range(1, n + 1):
        tag = i.to_bytes(4, "big")
        k = hmac.new(seed, b"subscriber-k" + tag, hashlib.sha256).digest()[:16]
        home_key = hmac.new(seed, b"subscriber-home" + tag,
                            hashlib.sha256).digest()
        supi = Supi(mcc=mcc, mnc=mnc, msin=str(i).zfill(msin_len))
        store.add(SubscriberRecord(
            supi=supi,
            cred=RootCredential(k=k, sqn=0, amf_field=b"\x80\x00"),
            allowed_methods=frozenset(methods),
            realm=realm_for(mcc, mnc),
            concealment_scheme=scheme,
            home_key=home_key))
    return store
