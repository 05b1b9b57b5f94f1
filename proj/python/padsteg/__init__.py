"""Ethernet padding covert channel: codec, simulator and analyzer."""

import json as _json

from ._core import (
    Error,
    Reassembler,
    Trace,
    active_warden,
    active_warden_frame,
    build_arp_request,
    build_tcp_ack,
    chunk_count_for,
    chunk_message,
    classify_padding,
    detect_hidden_nodes,
    encode_advertisement,
    estimate_bandwidth,
    estimate_bandwidth_shared,
    padding_length_for,
    parse_frame,
    report_json,
    verify_advertisement,
)
from ._core import simulate as _simulate


def compute_report(trace):
    return _json.loads(report_json(trace))


def reassemble(chunks):
    """Feeds chunks in order and returns every completed message."""
    r = Reassembler()
    out = []
    for c in chunks:
        msg = r.push(c)
        if msg is not None:
            out.append(msg)
    return out


def simulate(scenario, seed=None):
    """Runs a scenario given as a dict or JSON text."""
    if not isinstance(scenario, str):
        scenario = _json.dumps(scenario)
    return _simulate(scenario, seed)


__all__ = [
    "Error",
    "Reassembler",
    "Trace",
    "active_warden",
    "active_warden_frame",
    "build_arp_request",
    "build_tcp_ack",
    "chunk_count_for",
    "chunk_message",
    "classify_padding",
    "compute_report",
    "detect_hidden_nodes",
    "encode_advertisement",
    "estimate_bandwidth",
    "estimate_bandwidth_shared",
    "padding_length_for",
    "parse_frame",
    "reassemble",
    "simulate",
    "verify_advertisement",
]
