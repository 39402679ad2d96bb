"""Exact-rational discharging engines over a classified periodic code.

Two engines share one ledger shape.  The coarse engine moves 2/(5k)
across each code/non-code edge and certifies a 2/5 floor per vertex.
The main engine moves 12/(29k) across edges (rule 1) and then routes
single 1/29 rescue payments between clusters (rules 2 to 5) so that
every vertex, counted per cluster for code vertices, keeps at least
12/29.

All accounting is per fundamental domain: a transfer debits and
credits orbit representatives, and equivariance of the donor selection
makes the per-domain sums equal the per-instance flows of the infinite
grid.  Cluster-level transfers remember the donor instance offset so
the outflow claims can be audited instance-wise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from hexident.hexgrid import Vertex, ball, distance, neighbors, set_distance, share_face
from hexident.code import PeriodicCode
from hexident.cluster import Classification, Cluster, Instance, UnsupportedKind

RULE_AMOUNT = Fraction(1, 29)
MAIN_TARGET = Fraction(12, 29)
PROP1_TARGET = Fraction(2, 5)


class InvalidCode(ValueError):
    """The engines only run on verified identifying codes."""


class AmbiguousDonor(AssertionError):
    """Reserved: donor selection is deterministic, so this never fires in
    normal operation; it exists for internal sanity assertions."""


@dataclass(frozen=True)
class Transfer:
    """One charge movement: vertex to vertex (rule 1) or cluster to cluster."""

    rule: int
    src: Union[Vertex, Instance]
    dst: Union[Vertex, int]
    amount: Fraction
    mode: Optional[str] = None  # rule 4 donor override: "crowded" or "face"

    def to_json(self) -> dict:
        out = {"rule": self.rule, "amount": _frac(self.amount)}
        if self.rule == 1:
            out["fromVertex"] = list(self.src)
            out["toVertex"] = list(self.dst)
        else:
            out["fromCluster"] = self.src.cid
            out["fromOffset"] = [self.src.da, self.src.db]
            out["toCluster"] = self.dst
        if self.mode:
            out["mode"] = self.mode
        return out


@dataclass
class ChargeLedger:
    code: PeriodicCode
    classification: Optional[Classification]
    engine: str
    final: dict
    transfers: list
    notes: list = field(default_factory=list)

    def cluster_total(self, cid: int) -> Fraction:
        cl = self.classification.clusters[cid]
        return sum((self.final[c] for c in cl.classes), Fraction(0))

    def cluster_totals(self) -> dict:
        return {cl.cid: self.cluster_total(cl.cid) for cl in self.classification.clusters}

    def conserved(self) -> bool:
        return sum(self.final.values()) == self.code.size()

    def to_json(self) -> dict:
        lat = self.code.lattice
        return {
            "engine": self.engine,
            "lattice": {"p": lat.p, "q": lat.q, "shear": lat.shear},
            "final": [
                {"vertex": list(v), "charge": _frac(self.final[v])}
                for v in sorted(self.final, key=lat.index)
            ],
            "transfers": [t.to_json() for t in self.transfers],
            "clusterTotals": [
                {"cluster": cid, "total": _frac(total)}
                for cid, total in sorted(self.cluster_totals().items())
            ]
            if self.classification is not None
            else [],
            "conserved": self.conserved(),
            "notes": list(self.notes),
        }


@dataclass
class AuditReport:
    bound: Fraction
    failures: list
    outflows: dict

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {
            "bound": _frac(self.bound),
            "failures": [
                {
                    "subject": list(s) if isinstance(s, Vertex) else s,
                    "final": _frac(f),
                }
                for s, f in self.failures
            ],
            "outflows": {str(cid): _frac(v) for cid, v in sorted(self.outflows.items())},
        }


def _frac(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _require_valid(code: PeriodicCode):
    bad = code.verify()
    if bad:
        raise InvalidCode(f"not an identifying code: {bad[0]}")


def _rule1(code: PeriodicCode, unit: int, final: dict, transfers: list):
    # unit 29 pays 12/(29k); unit 5 pays 2/(5k)
    lat = code.lattice
    numer = 12 if unit == 29 else 2
    for w in lat.domain():
        if w in code.members:
            continue
        donors = [u for u in neighbors(w) if code.contains(u)]
        k = len(donors)
        amount = Fraction(numer, unit * k)
        for u in donors:
            cu = lat.canonical(u)
            final[w] += amount
            final[cu] -= amount
            transfers.append(Transfer(1, cu, w, amount))


def run_prop1(code: PeriodicCode) -> ChargeLedger:
    """Edge-local engine: every non-code vertex ends at exactly 2/5."""
    _require_valid(code)
    lat = code.lattice
    final = {v: Fraction(1 if v in code.members else 0) for v in lat.domain()}
    transfers: list = []
    _rule1(code, 5, final, transfers)
    return ChargeLedger(code, Classification(code), "prop1", final, transfers)


def _donor_key(cls: Classification, inst: Instance):
    return (min(cls.instance_vertices(inst)), inst)


def _pay_cluster(cls, final, transfers, rule, donor, recipient_cid, mode=None):
    debit = min(cls.clusters[donor.cid].classes)
    credit = min(cls.clusters[recipient_cid].classes)
    final[debit] -= RULE_AMOUNT
    final[credit] += RULE_AMOUNT
    transfers.append(Transfer(rule, donor, recipient_cid, RULE_AMOUNT, mode))


def _rescue_1cluster(cls: Classification, cl: Cluster, final, transfers, notes):
    (v,) = cl.vertices
    within3 = cls.instances_within({v}, 3, exclude=cl.anchored)
    big = [i for i in within3 if cls.is_big(i.cid)]
    if big:
        _pay_cluster(cls, final, transfers, 2, min(big, key=lambda i: _donor_key(cls, i)), cl.cid)
        return
    closed = [i for i in within3 if cls.is_closed3(i.cid)]
    if closed:
        _pay_cluster(cls, final, transfers, 3, min(closed, key=lambda i: _donor_key(cls, i)), cl.cid)
        return
    centers = [
        i
        for i in within3
        if cls.is_open3(i.cid) and distance(v, cls.instance_center(i), cap=3) <= 3
    ]
    crowded = [i for i in centers if cls.crowded[i.cid]]
    if crowded:
        donor = min(crowded, key=lambda i: _donor_key(cls, i))
        _pay_cluster(cls, final, transfers, 4, donor, cl.cid, mode="crowded")
        return
    faced = [i for i in centers if share_face(v, cls.instance_center(i))]
    if faced:
        donor = min(faced, key=lambda i: _donor_key(cls, i))
        _pay_cluster(cls, final, transfers, 4, donor, cl.cid, mode="face")
        return
    if centers:
        donor = min(centers, key=lambda i: _donor_key(cls, i))
        _pay_cluster(cls, final, transfers, 4, donor, cl.cid)
        return
    notes.append(f"uncrowded 1-cluster {cl.cid} has no qualifying donor")


def _rescue_needy(cls: Classification, cl: Cluster, final, transfers, notes):
    leaves = cl.leaves()
    donors = []
    for inst in cls.instances_within(cl.vertices, 3, exclude=cl.anchored):
        if not cls.is_open3(inst.cid):
            continue
        tv = cls.instance_vertices(inst)
        if not all(set_distance({lf}, tv, cap=3) <= 3 for lf in leaves):
            continue
        if cls.paired(cl, inst):
            continue
        donors.append(inst)
    if donors:
        _pay_cluster(cls, final, transfers, 5, min(donors, key=lambda i: _donor_key(cls, i)), cl.cid)
    else:
        notes.append(f"needy cluster {cl.cid} has no qualifying donor")


def run_main(code: PeriodicCode) -> ChargeLedger:
    """Rules 1 to 5 with literal precedence and deterministic donors."""
    _require_valid(code)
    lat = code.lattice
    cls = Classification(code)
    final = {v: Fraction(1 if v in code.members else 0) for v in lat.domain()}
    transfers: list = []
    notes: list = []
    _rule1(code, 29, final, transfers)
    for cl in cls.clusters:
        if cl.size == 1 and not cls.crowded[cl.cid]:
            _rescue_1cluster(cls, cl, final, transfers, notes)
    for cl in cls.clusters:
        if cl.size == 3 and cls.needy.get(cl.cid):
            _rescue_needy(cls, cl, final, transfers, notes)
    return ChargeLedger(code, cls, "main", final, transfers, notes)


def audit(ledger: ChargeLedger, bound: Fraction) -> AuditReport:
    """Non-code vertices per vertex, code vertices per cluster total."""
    failures = []
    for v, charge in ledger.final.items():
        if v not in ledger.code.members and charge < bound:
            failures.append((v, charge))
    cls = ledger.classification
    for cl in cls.clusters:
        m = len(cl.classes)
        total = ledger.cluster_total(cl.cid)
        if total < bound * m:
            failures.append((cl.cid, total))
    outflows = {
        cl.cid: outflow(ledger, cl) for cl in cls.clusters if cls.is_open3(cl.cid)
    }
    failures.sort(key=lambda sf: (isinstance(sf[0], int), sf[0] if isinstance(sf[0], int) else tuple(sf[0])))
    return AuditReport(bound, failures, outflows)


def outflow(ledger: ChargeLedger, cluster: Cluster) -> Fraction:
    """Total charge one instance of an open 3-cluster sends away."""
    cls = ledger.classification
    if not cls.is_open3(cluster.cid):
        raise UnsupportedKind("outflow is defined for open 3-clusters")
    total = Fraction(0)
    for t in ledger.transfers:
        if t.rule == 1:
            if t.src in cluster.classes:
                total += t.amount
        elif t.src.cid == cluster.cid:
            total += t.amount
    return total


def _received_from_anchored(ledger: ChargeLedger, donor: Cluster, inst: Instance) -> bool:
    # did the concrete instance `inst` get paid by the anchored donor copy
    for t in ledger.transfers:
        if t.rule == 1 or t.dst != inst.cid:
            continue
        if t.src.cid == donor.cid and (t.src.da + inst.da, t.src.db + inst.db) == (0, 0):
            return True
    return False


def _quiet_code_vertex_at_two(ledger: ChargeLedger, cluster: Cluster) -> bool:
    """Some code vertex at distance exactly two gets nothing from the cluster."""
    cls = ledger.classification
    code = ledger.code
    seen = set()
    for v in cluster.vertices:
        for w in ball(v, 2):
            if w in seen or w in cluster.vertices or not code.contains(w):
                continue
            seen.add(w)
            if set_distance({w}, cluster.vertices, cap=2) != 2:
                continue
            if not _received_from_anchored(ledger, cluster, cls.instance_of(w)):
                return True
    return False


def claims_report(ledger: ChargeLedger) -> dict:
    """Outflow bounds for open 3-clusters and spending caps for closed ones.

    Every open 3-cluster may send at most 52/29.  One that leaves some
    code vertex at distance two unpaid, or that has a closed 3-cluster
    or 4+-cluster within three, may send at most 51/29 (and the latter
    kind is never needy).  A closed 3-cluster pays at most nine rescue
    recipients when uncrowded, ten when crowded.
    """
    cls = ledger.classification
    cap52 = Fraction(52, 29)
    cap51 = Fraction(51, 29)
    entries = []
    all_ok = True
    for cl in cls.clusters:
        if not cls.is_open3(cl.cid):
            continue
        out = outflow(ledger, cl)
        quiet = _quiet_code_vertex_at_two(ledger, cl)
        heavy = any(
            cls.is_big(i.cid) or cls.is_closed3(i.cid)
            for i in cls.instances_within(cl.vertices, 3, exclude=cl.anchored)
        )
        entry = {
            "cluster": cl.cid,
            "outflow": _frac(out),
            "cap52": out <= cap52,
            "quietAtTwo": quiet,
            "cap51quiet": (not quiet) or out <= cap51,
            "heavyNearby": heavy,
            "cap51heavy": (not heavy) or (out <= cap51 and not cls.needy[cl.cid]),
        }
        all_ok = all_ok and entry["cap52"] and entry["cap51quiet"] and entry["cap51heavy"]
        entries.append(entry)
    spending = []
    for cl in cls.clusters:
        if not cls.is_closed3(cl.cid):
            continue
        paid = sum(1 for t in ledger.transfers if t.rule != 1 and t.src.cid == cl.cid)
        cap = 10 if cls.crowded[cl.cid] else 9
        spending.append({"cluster": cl.cid, "recipients": paid, "cap": cap, "ok": paid <= cap})
        all_ok = all_ok and paid <= cap
    return {"open3": entries, "closed3": spending, "ok": all_ok}
