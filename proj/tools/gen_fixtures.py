#!/usr/bin/env python3
"""Generate the shipped mini-corpora and benchmark dataset under data/.

Each corpus is a synthetic log file in the style of the public LogHub
samples (OpenSSH, OpenStack, HDFS), plus a template file and an ingest
manifest. The dataset's expected outputs are computed here, directly from the
generated records with Python's `re`, so they serve as an oracle for the C++
ingest and query engine.

Usage: gen_fixtures.py [--seed N] [--out DIR]
"""

import argparse
import datetime as dt
import json
import random
import re
from pathlib import Path

ANCHOR = dt.datetime(2025, 1, 15, 12, 0, 0, tzinfo=dt.timezone.utc)
NS = 1_000_000_000
LOG_LOOKBACK = 7 * 24 * 3600 * NS
LOG_LIMIT = 5000


# ---------------------------------------------------------------------------
# Corpus generation. Every generator returns (lines, records) with one record
# (source_ts or None, labels, content) per line. Lines without a timestamp are
# the ones no template matches.


def ip(rng):
    return f"{rng.randint(1, 223)}.{rng.randint(0, 255)}.{rng.randint(0, 255)}.{rng.randint(1, 254)}"


def spread(rng, start, seconds, n):
    return sorted(start + dt.timedelta(seconds=rng.uniform(0, seconds)) for _ in range(n))


def gen_openssh(rng):
    hosts = [f"LabSZ-tenant-{i}" for i in range(1, 7)]
    attackers = [ip(rng) for _ in range(6)]
    users = ["root", "admin", "test", "oracle", "guest", "fztu"]
    start = dt.datetime(2000, 12, 10, 6, 0, 0)
    span = 3 * 24 * 3600 - 600
    times = [t.replace(microsecond=0) for t in spread(rng, start, span, 480)]

    def message(kind, src):
        port = rng.randint(1024, 65000)
        if kind == "failed":
            user = rng.choice(users[:5])
            prefix = "invalid user " if rng.random() < 0.4 else ""
            return f"Failed password for {prefix}{user} from {src} port {port} ssh2"
        if kind == "accepted":
            return f"Accepted password for fztu from {src} port {port} ssh2"
        if kind == "session":
            return "pam_unix(sshd:session): session opened for user fztu by (uid=0)"
        if kind == "pam":
            return f"PAM service(sshd) ignoring max retries; {rng.randint(4, 6)} > 3"
        if kind == "disconnect":
            return f"Received disconnect from {src}: 11: Bye Bye [preauth]"
        if kind == "invalid":
            return f"Invalid user {rng.choice(users[1:5])} from {src}"
        if kind == "reverse":
            return (f"reverse mapping checking getaddrinfo for {src}.static.example.net [{src}] failed"
                    " - POSSIBLE BREAK-IN ATTEMPT!")
        if kind == "auth":
            return (f"pam_unix(sshd:auth): authentication failure; logname= uid=0 euid=0 tty=ssh ruser= "
                    f"rhost={src}")
        raise ValueError(kind)

    kinds = ["failed"] * 10 + ["auth"] * 5 + ["disconnect"] * 4 + ["invalid"] * 3 + ["reverse"] * 2 + \
        ["pam"] * 2 + ["accepted", "session"]
    # Attackers get skewed weights so the top-k source IPs are unambiguous.
    weights = [30, 20, 12, 7, 4, 2]

    lines, records = [], []
    ident_slots = set(rng.sample(range(40, len(times) - 40), 7))
    ident_tenant5 = set(sorted(ident_slots)[1:4])
    for i, t in enumerate(times):
        if i in ident_slots:
            host = "LabSZ-tenant-5" if i in ident_tenant5 else rng.choice(["LabSZ-tenant-1", "LabSZ-tenant-3"])
            msg = f"Did not receive identification string from {ip(rng)}"
        else:
            host = rng.choice(hosts)
            kind = rng.choice(kinds)
            src = ip(rng) if kind == "accepted" else rng.choices(attackers, weights)[0]
            msg = message(kind, src)
        content = f"sshd[{rng.randint(20000, 30000)}]: {msg}"
        line = f"{t.strftime('%b')} {t.day:>2} {t.strftime('%H:%M:%S')} {host} {content}"
        lines.append(line)
        records.append((t, {"component": "sshd", "hostname": host}, content))
        if rng.random() < 0.02:
            lines.append("last message repeated 2 times")
            records.append((None, {"template": "none"}, "last message repeated 2 times"))
    return lines, records


def gen_openstack(rng):
    start = dt.datetime(2017, 5, 14, 10, 0, 0)
    span = 3 * 24 * 3600
    tenant = "54fadb412c4e40cdbaed9335e4c35a9e"
    lines, records = [], []

    def req():
        return f"[req-{rng.getrandbits(32):08x}-{rng.getrandbits(16):04x} {tenant} - - -]"

    events = []
    for t in spread(rng, start, span, 300):
        status = rng.choices([200, 202, 204, 404], [70, 10, 10, 10])[0]
        method = "GET" if status != 202 else "POST"
        path = f"/v2/{tenant}/servers/detail" if method == "GET" else f"/v2/{tenant}/servers"
        elapsed = f"{rng.uniform(0.05, 0.9):.7f}"
        events.append((t, "INFO", "nova.osapi_compute.wsgi.server",
                       f"{req()} 10.11.10.1 \"{method} {path} HTTP/1.1\" status: {status} "
                       f"len: {rng.randint(200, 2500)} time: {elapsed}"))
    for t in spread(rng, start, span, 60):
        uuid = f"{rng.getrandbits(128):032x}"
        msg = rng.choice(["Terminating instance", "Took 0.{} seconds to spawn the instance on the hypervisor",
                          "VM Started (Lifecycle Event)", "Instance destroyed successfully."])
        if "{}" in msg:
            msg = msg.format(rng.randint(10, 99))
        events.append((t, "INFO", "nova.compute.manager", f"{req()} [instance: {uuid}] {msg}"))
    t = start + dt.timedelta(seconds=300)
    while t < start + dt.timedelta(seconds=span):
        events.append((t, "INFO", "nova.virt.libvirt.imagecache",
                       f"{req()} Active base files: /var/lib/nova/instances/_base/{rng.getrandbits(64):016x}"))
        t += dt.timedelta(seconds=rng.randint(480, 720), milliseconds=rng.randint(0, 999))
    for t in spread(rng, start, span, 14):
        level = rng.choice(["WARNING", "ERROR"])
        events.append((t, level, "keystonemiddleware.auth_token",
                       "Identity response: token validation failed with status 503"))
    for t in spread(rng, start, span, 8):
        events.append((t, "ERROR", "nova.compute.manager",
                       f"{req()} Instance failed to spawn"))
    events.sort(key=lambda e: e[0])

    for t, level, component, content in events:
        t = t.replace(microsecond=(t.microsecond // 1000) * 1000)
        stamp = t.strftime("%Y-%m-%d %H:%M:%S.") + f"{t.microsecond // 1000:03d}"
        lines.append(f"{stamp} {rng.randint(2000, 30000)} {level} {component} {content}")
        records.append((t, {"component": component, "level": level}, content))
        if level == "ERROR" and "failed to spawn" in content:
            for extra in ["Traceback (most recent call last):",
                          '  File "/usr/lib/python2.7/site-packages/nova/compute/manager.py", line 2078']:
                lines.append(extra)
                records.append((None, {"template": "none"}, extra))
    return lines, records


def gen_hdfs(rng):
    start = dt.datetime(2008, 11, 9, 20, 0, 0)
    span = 3 * 24 * 3600 - 3600
    nodes = [f"10.250.{rng.randint(0, 20)}.{rng.randint(1, 254)}" for _ in range(5)]
    node_weights = [9, 5, 3, 2, 1]
    exceptions = [("java.io.IOException", 9), ("java.io.EOFException", 6),
                  ("java.io.InterruptedIOException", 4), ("java.net.SocketTimeoutException", 2)]

    def blk():
        return f"blk_{rng.choice(['', '-'])}{rng.getrandbits(62)}"

    events = []
    for t in spread(rng, start, span, 150):
        events.append((t, "INFO", "dfs.DataNode$PacketResponder",
                       f"PacketResponder {rng.randint(0, 2)} for block {blk()} terminating"))
    for t in spread(rng, start, span, 60) + spread(rng, start + dt.timedelta(seconds=span - 3000), 3000, 25):
        events.append((t, "INFO", "dfs.FSNamesystem",
                       f"BLOCK* NameSystem.allocateBlock: /user/root/rand/_temporary/_task_200811092030_0001_m_"
                       f"{rng.randint(0, 2000):06d}_0/part-{rng.randint(0, 2000):05d}. {blk()}"))
    recent = start + dt.timedelta(seconds=span - 20 * 3600)
    for name, count in exceptions:
        for t in spread(rng, recent, 20 * 3600, count):
            events.append((t, "INFO", "dfs.DataNode",
                           f"writeBlock {blk()} received exception {name}: Connection reset by peer"))
    for t in spread(rng, start, 30 * 3600, 5):
        events.append((t, "INFO", "dfs.DataNode",
                       f"writeBlock {blk()} received exception java.io.IOException: Broken pipe"))
    recent = start + dt.timedelta(seconds=span - 11 * 3600)
    for t in spread(rng, recent, 11 * 3600, 40):
        src = rng.choices(nodes, node_weights)[0]
        dst = rng.choice(nodes)
        events.append((t, "INFO", "dfs.DataNode$DataTransfer",
                       f"{src}:50010:Transmitted block {blk()} to /{dst}:50010"))
    for t in spread(rng, start, span, 80):
        src = rng.choice(nodes)
        events.append((t, "INFO", "dfs.DataNode$DataXceiver",
                       f"Receiving block {blk()} src: /{src}:{rng.randint(30000, 60000)} dest: /{src}:50010"))
    for t in spread(rng, start, span, 12):
        events.append((t, "WARN", "dfs.DataNode$DataXceiver",
                       f"{rng.choice(nodes)}:50010:Got exception while serving {blk()} to /{rng.choice(nodes)}:"))
    events.sort(key=lambda e: e[0])

    lines, records = [], []
    for t, level, component, content in events:
        t = t.replace(microsecond=0)
        lines.append(f"{t.strftime('%y%m%d %H%M%S')} {rng.randint(10, 3000)} {level} {component}: {content}")
        records.append((t, {"component": component, "level": level}, content))
    return lines, records


TEMPLATES = {
    "openssh": """# OpenSSH syslog lines: "Dec 10 06:55:46 LabSZ sshd[24200]: message"
id: sshd
pattern: ^(?P<ts>[A-Z][a-z]{2} [ 0-9]\\d \\d{2}:\\d{2}:\\d{2}) (?P<host>\\S+) (?P<content>(?P<component>sshd)\\[\\d+\\]: .*)$
ts_group: ts
ts_format: %b %e %H:%M:%S
component_group: component
content_group: content
label.hostname: host
""",
    "openstack": """# nova/keystone service logs: "2017-05-16 00:00:00.008 25746 INFO nova.compute.manager [req-...] message"
id: openstack
pattern: ^(?P<ts>\\d{4}-\\d{2}-\\d{2} \\d{2}:\\d{2}:\\d{2}\\.\\d{3}) \\d+ (?P<level>[A-Z]+) (?P<component>[a-z_.]+) (?P<content>.*)$
ts_group: ts
ts_format: %Y-%m-%d %H:%M:%S.%f
level_group: level
component_group: component
content_group: content
""",
    "hdfs": """# HDFS daemon logs: "081109 203615 148 INFO dfs.DataNode$PacketResponder: message"
id: hdfs
pattern: ^(?P<ts>\\d{6} \\d{6}) \\d+ (?P<level>[A-Z]+) (?P<component>[A-Za-z.$]+): (?P<content>.*)$
ts_group: ts
ts_format: %y%m%d %H%M%S
level_group: level
component_group: component
content_group: content
""",
}

DEFAULT_LABELS = {
    "openssh": {"application": "openssh", "job": "openssh"},
    "openstack": {"application": "openstack", "job": "openstack", "region": "asia-pacific"},
    "hdfs": {"application": "hdfs", "job": "hdfs"},
}

DEFAULT_YEAR = {"openssh": 2000, "openstack": 2000, "hdfs": 2000}


# ---------------------------------------------------------------------------
# Ingest model: borrowed timestamps, tie-break, rebase, grouping.


def to_ns(t):
    t = t.replace(tzinfo=dt.timezone.utc)
    return int(t.timestamp()) * NS + t.microsecond * 1000


def ingest_records(app, records):
    src = []
    last = None
    for t, labels, content in records:
        src.append(t if t is not None else last)
        if t is not None:
            last = t
    nxt = None
    for i in range(len(src) - 1, -1, -1):
        if records[i][0] is not None:
            nxt = records[i][0]
        elif src[i] is None:
            src[i] = nxt
    seen = {}
    entries = []
    for (t, labels, content), s in zip(records, src):
        assert s is not None
        ns = to_ns(s)
        k = seen.get(ns, 0)
        seen[ns] = k + 1
        full = dict(DEFAULT_LABELS[app])
        full.update(labels)
        entries.append({"ts": ns + k, "labels": full, "line": content})
    anchor = to_ns(ANCHOR.replace(tzinfo=None))
    shift = anchor - max(e["ts"] for e in entries)
    for e in entries:
        e["ts"] += shift
    assert len({e["ts"] for e in entries}) == len(entries)
    entries.sort(key=lambda e: e["ts"])
    return entries


def label_string(labels):
    return "{" + ", ".join(f'{k}="{v}"' for k, v in sorted(labels.items())) + "}"


def rfc3339(ns):
    secs, frac = divmod(ns, NS)
    out = dt.datetime.fromtimestamp(secs, dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%S")
    if frac:
        out += "." + f"{frac:09d}".rstrip("0")
    return out + "Z"


# ---------------------------------------------------------------------------
# Oracle helpers for the reference queries.

NOW = None


def selector(entries, **match):
    out = []
    for e in entries:
        ok = True
        for k, v in match.items():
            if isinstance(v, re.Pattern):
                ok = ok and v.fullmatch(e["labels"].get(k, "")) is not None
            else:
                ok = ok and e["labels"].get(k) == v
        if ok:
            out.append(dict(e, labels=dict(e["labels"])))
    return out


def window(entries, range_ns):
    return [e for e in entries if NOW - range_ns <= e["ts"] <= NOW]


def extract(entries, pattern):
    rx = re.compile(pattern)
    for e in entries:
        m = rx.search(e["line"])
        if m is None:
            e["labels"]["__error__"] = "regexp"
            continue
        for name, value in m.groupdict().items():
            if value:
                key = name + "_extracted" if name in e["stream"] else name
                e["labels"][key] = value
    return entries


def with_stream(entries):
    for e in entries:
        e["stream"] = dict(e["labels"])
    return entries


def log_result(entries):
    rows = window(entries, LOG_LOOKBACK)
    truncated = len(rows) > LOG_LIMIT
    rows = rows[-LOG_LIMIT:]
    return {"type": "log",
            "rows": [{"ts": rfc3339(e["ts"]), "labels": e["labels"], "line": e["line"]} for e in rows],
            "truncated": truncated}


def series(entries, value=lambda e: 1.0, drop=()):
    groups = {}
    for e in entries:
        labels = {k: v for k, v in e["labels"].items() if k not in drop}
        groups.setdefault(label_string(labels), (labels, []))[1].append(value(e))
    return groups


def metric_result(samples):
    samples = sorted(samples, key=lambda s: label_string(s[0]))
    return {"type": "metric", "samples": [{"labels": l, "value": v} for l, v in samples],
            "evaluated_at": rfc3339(NOW)}


def count_over_time(entries):
    return [(labels, float(len(vals))) for labels, vals in series(entries).values()]


def avg_over_time(entries, label):
    out = []
    for labels, vals in series(entries, lambda e: float(e["labels"][label]), drop=(label,)).values():
        total = 0.0
        for v in vals:
            total += v
        out.append((labels, total / len(vals)))
    return out


def sum_by(samples, by):
    groups = {}
    for labels, value in sorted(samples, key=lambda s: label_string(s[0])):
        key = {k: v for k, v in labels.items() if k in by}
        ks = label_string(key)
        prev = groups.get(ks, (key, 0.0))[1]
        groups[ks] = (key, prev + value)
    return list(groups.values())


def topk(k, samples):
    ordered = sorted(samples, key=lambda s: (-s[1], label_string(s[0])))
    # Keep the fixtures away from ties at the cut.
    if len(ordered) > k and ordered[k - 1][1] == ordered[k][1]:
        raise SystemExit(f"topk({k}) cut falls on a tie: {ordered}")
    return ordered[:k]


H = 3600 * NS
D = 24 * H


def contains(*needles):
    return lambda e: all(n in e["line"] for n in needles)


def keep(entries, pred):
    return [e for e in entries if pred(e)]


def matches(pattern):
    rx = re.compile(pattern)
    return lambda e: rx.search(e["line"]) is not None


def openssh_tuples(E):
    def line_format(e):
        e["line"] = f"`{rfc3339(e['ts'])}` - Failed to receive identification string from "
        return e

    ident = [line_format(e) for e in keep(selector(E, application="openssh"),
                                          contains("Did not receive identification string from"))
             if e["labels"].get("hostname") == "LabSZ-tenant-5"]
    assert len(ident) == 3
    failed = with_stream(keep(window(selector(E, application="openssh"), 3 * D), contains("Failed password")))
    top_ips = topk(2, sum_by(count_over_time(extract(failed, r"from (?P<source_ip>\d+\.\d+\.\d+\.\d+) port")),
                             ["source_ip"]))
    return [
        ("Brute Force Attempts", "METRIC",
         "How many failed password attempts were logged in the last 24 hours?",
         'sum(count_over_time({application="openssh"} |= "Failed password" [24h]))',
         metric_result(sum_by(count_over_time(
             keep(window(selector(E, application="openssh"), D), contains("Failed password"))), []))),
        ("Brute Force Attempts", "METRIC",
         "How many times did PAM ignore max retries on each host in the last 24 hours?",
         'sum by (hostname) (count_over_time({application="openssh"} |= "PAM service(sshd) ignoring max retries" '
         '[24h]))',
         metric_result(sum_by(count_over_time(
             keep(window(selector(E, application="openssh"), D),
                  contains("PAM service(sshd) ignoring max retries"))), ["hostname"]))),
        ("Suspicious Sources", "METRIC",
         "Which 2 source IPs had the most failed password attempts over the last 3 days?",
         'topk(2, sum by (source_ip) (count_over_time({application="openssh"} |= "Failed password" '
         '| regexp "from (?P<source_ip>\\\\d+\\\\.\\\\d+\\\\.\\\\d+\\\\.\\\\d+) port" [3d])))',
         metric_result(top_ips)),
        ("Connection Failures", "LOG",
         "When did LabSZ-tenant-5 fail to receive an identification string?",
         '{application="openssh"} |= "Did not receive identification string from" | hostname="LabSZ-tenant-5" '
         '| line_format "`{{__timestamp__}}` - Failed to receive identification string from {{.content}}"',
         log_result(ident)),
        ("Successful Logins", "LOG",
         "Show the successful password logins for user fztu.",
         '{application="openssh"} |= "Accepted password for fztu"',
         log_result(keep(selector(E, application="openssh"), contains("Accepted password for fztu")))),
        ("Brute Force Attempts", "LOG",
         "Show attempts to log in as a nonexistent user on LabSZ-tenant-2.",
         '{application="openssh", hostname="LabSZ-tenant-2"} |= "Invalid user"',
         log_result(keep(selector(E, application="openssh", hostname="LabSZ-tenant-2"),
                         contains("Invalid user")))),
    ]


def openstack_tuples(E):
    wsgi = with_stream(keep(window(selector(E, application="openstack",
                                            component="nova.osapi_compute.wsgi.server"), H),
                            lambda e: True))
    wsgi = [e for e in extract(wsgi, r"time: (?P<resp_time>\d+\.\d+)") if "resp_time" in e["labels"]]
    for e in wsgi:
        del e["stream"]
    return [
        ("Service Errors", "METRIC",
         "How many token validation failures with status 503 happened in the last 30 days?",
         'count_over_time({job="openstack", region="asia-pacific"} |= "503" |= "token validation" [30d])',
         metric_result(count_over_time(keep(window(selector(E, job="openstack", region="asia-pacific"), 30 * D),
                                            contains("503", "token validation"))))),
        ("Image Cache", "METRIC",
         "How many times did the image cache report active base files in the last hour?",
         'sum by (component) (count_over_time({application="openstack", component="nova.virt.libvirt.imagecache"} '
         '|~ "Active base files: (?P<file_path>/.*)" [1h]))',
         metric_result(sum_by(count_over_time(
             keep(window(selector(E, application="openstack", component="nova.virt.libvirt.imagecache"), H),
                  matches(r"Active base files: (?P<file_path>/.*)"))), ["component"]))),
        ("API Latency", "METRIC",
         "What was the average compute API response time over the last hour?",
         'avg_over_time({application="openstack", component="nova.osapi_compute.wsgi.server"} '
         '| regexp "time: (?P<resp_time>\\\\d+\\\\.\\\\d+)" | unwrap resp_time [1h])',
         metric_result(avg_over_time(wsgi, "resp_time"))),
        ("Service Errors", "LOG",
         "Show all error logs from OpenStack.",
         '{application="openstack", level="ERROR"}',
         log_result(selector(E, application="openstack", level="ERROR"))),
        ("Instance Lifecycle", "LOG",
         "Which instances were terminated?",
         '{job="openstack", component="nova.compute.manager"} |= "Terminating instance"',
         log_result(keep(selector(E, job="openstack", component="nova.compute.manager"),
                         contains("Terminating instance")))),
        ("API Errors", "LOG",
         "Show compute API requests that returned 404.",
         '{application="openstack", component="nova.osapi_compute.wsgi.server"} |= "status: 404"',
         log_result(keep(selector(E, application="openstack", component="nova.osapi_compute.wsgi.server"),
                         contains("status: 404")))),
    ]


def hdfs_tuples(E):
    writes = with_stream(keep(window(selector(E, application="hdfs", component=re.compile(r"dfs.DataNode.*")), D),
                              matches(r"writeBlock .* received exception")))
    writes = extract(writes, r"writeBlock .* received exception (?P<exception_type>[^:]+)")
    transfers = with_stream(keep(window(selector(E, application="hdfs", component="dfs.DataNode$DataTransfer"),
                                        12 * H), matches(r"Transmitted block .* to .*")))
    transfers = extract(transfers, r"(?P<source_ip>[\d\.]+):\d+:Transmitted block .* to .*")
    return [
        ("Block Allocation", "METRIC",
         "How many times did the NameSystem allocate new blocks in the past hour?",
         'sum(count_over_time({application="hdfs"} |~ "BLOCK\\\\* NameSystem\\\\.allocateBlock:" [1h]))',
         metric_result(sum_by(count_over_time(keep(window(selector(E, application="hdfs"), H),
                                                   matches(r"BLOCK\* NameSystem\.allocateBlock:"))), []))),
        ("Write Failures", "METRIC",
         "What are the top 3 most frequent exceptions during writeBlock operations in the past 24 hours?",
         'topk(3, sum by (exception_type) (count_over_time({component=~"dfs.DataNode.*", application="hdfs"} '
         '|~ "writeBlock .* received exception" '
         '| regexp "writeBlock .* received exception (?P<exception_type>[^:]+)" [24h])))',
         metric_result(topk(3, sum_by(count_over_time(writes), ["exception_type"])))),
        ("Data Transfer", "METRIC",
         "Which DataNode transmitted the most blocks in the last 12 hours?",
         'topk(1, sum by (source_ip) (count_over_time({application="hdfs", component="dfs.DataNode$DataTransfer"} '
         '|~ "Transmitted block .* to .*" | regexp "(?P<source_ip>[\\\\d\\\\.]+):\\\\d+:Transmitted block .* to .*" '
         '[12h])))',
         metric_result(topk(1, sum_by(count_over_time(transfers), ["source_ip"])))),
        ("Block Lifecycle", "LOG",
         "Show PacketResponder terminations for blocks with negative ids.",
         '{application="hdfs", component="dfs.DataNode$PacketResponder"} |= "terminating" |= "blk_-"',
         log_result(keep(selector(E, application="hdfs", component="dfs.DataNode$PacketResponder"),
                         contains("terminating", "blk_-")))),
        ("Service Errors", "LOG",
         "Show all HDFS warnings.",
         '{application="hdfs", level="WARN"}',
         log_result(selector(E, application="hdfs", level="WARN"))),
        ("Data Transfer", "LOG",
         "Show blocks received from 10.250.19.102.",
         '{application="hdfs"} |= "Receiving block" |= "src: /10.250.19.102:"',
         log_result(keep(selector(E, application="hdfs"), contains("Receiving block", "src: /10.250.19.102:")))),
    ]


def check_nonempty(app, rows):
    for use_case, qtype, nl, query, expected in rows:
        if not expected.get("samples", expected.get("rows")):
            raise SystemExit(f"{app}: empty expected output for {nl!r}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=20250115)
    parser.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "data")
    args = parser.parse_args()

    global NOW
    NOW = to_ns(ANCHOR.replace(tzinfo=None))
    generators = {"openssh": gen_openssh, "openstack": gen_openstack, "hdfs": gen_hdfs}
    builders = {"openssh": openssh_tuples, "openstack": openstack_tuples, "hdfs": hdfs_tuples}
    dataset = []
    for app, gen in generators.items():
        rng = random.Random(f"{args.seed}-{app}")
        lines, records = gen(rng)
        if app == "hdfs":
            hot = "10.250.19.102"
            lines, records = retarget_receiving(lines, records, hot)
        d = args.out / app
        d.mkdir(parents=True, exist_ok=True)
        (d / f"{app}.log").write_text("\n".join(lines) + "\n")
        (d / "templates.txt").write_text(TEMPLATES[app])
        manifest = {
            "application": app,
            "files": [f"{app}.log"],
            "templates": "templates.txt",
            "default_labels": DEFAULT_LABELS[app],
            "default_year": DEFAULT_YEAR[app],
            "anchor": rfc3339(NOW),
        }
        (d / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")

        entries = ingest_records(app, records)
        rows = builders[app](entries)
        check_nonempty(app, rows)
        for i, (use_case, qtype, nl, query, expected) in enumerate(rows, 1):
            dataset.append({
                "id": f"{app}-{i:02d}",
                "application": app,
                "use_case": use_case,
                "query_type": qtype,
                "nl_question": nl,
                "reference_query": query,
                "expected_output": expected,
                "vars": {},
            })
    with open(args.out / "dataset.jsonl", "w") as f:
        for t in dataset:
            f.write(json.dumps(t, sort_keys=True) + "\n")


def retarget_receiving(lines, records, hot):
    # Make a handful of "Receiving block" lines come from one fixed node so the
    # corresponding log tuple has a known source address.
    out_lines, out_records = [], []
    n = 0
    for line, (t, labels, content) in zip(lines, records):
        if content.startswith("Receiving block") and n < 6 and hash_pick(line):
            src = content.split("src: /")[1].split(":")[0]
            line = line.replace(src, hot)
            content = content.replace(src, hot)
            n += 1
        out_lines.append(line)
        out_records.append((t, labels, content))
    return out_lines, out_records


def hash_pick(line):
    return sum(line.encode()) % 3 == 0


if __name__ == "__main__":
    main()
