"""Metadata anonymization applied at ingest."""

from __future__ import annotations

import uuid

from ..types import GROUP_LABELS, SubjectMeta

# Only these keys survive ingest; everything else is dropped.
WHITELIST = ("age", "sex", "group_label")


def anonymize(meta: dict | None) -> SubjectMeta:
    """Whitelist-project raw metadata and attach a fresh opaque id.

    The opaque id is random, never derived from the input, so repeated
    ingests of identical data get distinct identities.
    """
    meta = meta or {}
    age = meta.get("age")
    if age is not None:
        try:
            age = float(age)
        except (TypeError, ValueError):
            age = None
    sex = meta.get("sex")
    if sex is not None:
        sex = str(sex)
    group = meta.get("group_label")
    if group not in GROUP_LABELS:
        group = "unlabeled"
    return SubjectMeta(
        opaque_id=uuid.uuid4().hex,
        group_label=group,
        age=age,
        sex=sex,
    )
