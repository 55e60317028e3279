"""Registrable-domain (eTLD+1) resolution against a pinned public-suffix snapshot.

The snapshot ships with the package in standard PSL text format; a different
snapshot can be supplied per call for reproducible comparisons across vintages.
"""

from __future__ import annotations

import ipaddress
from functools import lru_cache
from importlib import resources
from urllib.parse import urlsplit

from .errors import UrlError

_SNAPSHOT_RESOURCE = "public_suffix_snapshot.dat"


def load_suffix_rules(path=None):
    """Parse a PSL-format file into (exact, wildcard, exception) rule sets."""
    if path is None:
        text = resources.files("scamscout.data").joinpath(_SNAPSHOT_RESOURCE).read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    exact, wildcard, exception = set(), set(), set()
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("//"):
            continue
        if line.startswith("!"):
            exception.add(line[1:])
        elif line.startswith("*."):
            wildcard.add(line[2:])
        else:
            exact.add(line)
    return exact, wildcard, exception


@lru_cache(maxsize=1)
def _default_rules():
    return load_suffix_rules(None)


def _host_of(url: str) -> str:
    parts = urlsplit(url)
    if not parts.scheme or not parts.netloc:
        raise UrlError(f"not an absolute URL: {url!r}")
    host = parts.hostname
    if not host:
        raise UrlError(f"URL has no host: {url!r}")
    return host.rstrip(".").lower()


def _is_ip_literal(host: str) -> bool:
    try:
        ipaddress.ip_address(host.strip("[]"))
        return True
    except ValueError:
        return False


def public_suffix(host: str, rules=None) -> str:
    """Longest matching public suffix of ``host`` per the PSL algorithm.

    Unlisted TLDs fall back to the implicit ``*`` rule (the TLD itself).
    """
    exact, wildcard, exception = rules if rules is not None else _default_rules()
    labels = host.split(".")
    match_len = 1  # implicit "*" rule
    for i in range(len(labels)):
        candidate = ".".join(labels[i:])
        if candidate in exception:
            # exception rule wins outright: suffix is the rule minus its first label
            return ".".join(labels[i + 1:])
        n = len(labels) - i
        if candidate in exact and n > match_len:
            match_len = n
        parent = ".".join(labels[i + 1:])
        if parent and parent in wildcard and n + 0 > match_len:
            # "*.foo" makes "<anything>.foo" a public suffix
            match_len = n
    return ".".join(labels[-match_len:])


def root_domain(url: str, rules=None) -> str:
    """Registrable domain (public suffix + one label) of an absolute URL.

    IP-literal hosts are returned verbatim. A host that *is* a public suffix
    has no registrable domain and is returned as-is.
    """
    host = _host_of(url)
    if _is_ip_literal(host):
        return host
    suffix = public_suffix(host, rules)
    if host == suffix:
        return host
    n_suffix = len(suffix.split("."))
    labels = host.split(".")
    return ".".join(labels[-(n_suffix + 1):])
