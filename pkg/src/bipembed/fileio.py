"""Flat-file formats and JSON artifact serialization.

Graph files (".bg"): first significant line ``bipartite <nA> <nB> <m>``,
then m lines ``<a> <b>`` with 0-based A-index then B-index; ``#`` starts a
comment; duplicate edges are a parse error.  Labelling files hold one
global vertex id per line, a permutation of 0..2n-1, where even ids are
A-side (id 2i = A_i) and odd ids are B-side (id 2j+1 = B_j).

JSON artifacts carry a ``kind`` tag and print rationals exactly as
"p/q" strings.  Writers sort everything they emit, so identical inputs
produce byte-identical files.
"""

from __future__ import annotations

import json
from fractions import Fraction

from .graphs import BipartiteGraph, Side, VertexId
from .hamilton import HamiltonCycle
from .homomorphism import BandwidthLabelling, CycleHomomorphism, bandwidth_labelling
from .embedder import Embedding


class FileFormatError(ValueError):
    def __init__(self, path: str, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


def global_id(v: VertexId) -> int:
    return 2 * v.index if v.side is Side.A else 2 * v.index + 1


def from_global_id(g: int) -> VertexId:
    return VertexId(Side.A, g // 2) if g % 2 == 0 else VertexId(Side.B, g // 2)


# ---------------------------------------------------------------------------
# .bg graph files
# ---------------------------------------------------------------------------


def write_graph(path: str, G: BipartiteGraph) -> None:
    lines = [f"bipartite {G.size_a} {G.size_b} {G.edge_count}"]
    for a, b in sorted(G.edges()):
        lines.append(f"{a} {b}")
    with open(path, "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def read_graph(path: str) -> BipartiteGraph:
    header = None
    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    expected = -1
    with open(path) as f:
        for no, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if header is None:
                parts = line.split()
                if len(parts) != 4 or parts[0] != "bipartite":
                    raise FileFormatError(path, no, "expected 'bipartite <nA> <nB> <m>'")
                try:
                    na, nb, expected = int(parts[1]), int(parts[2]), int(parts[3])
                except ValueError:
                    raise FileFormatError(path, no, "non-integer header field") from None
                header = (na, nb)
                continue
            parts = line.split()
            if len(parts) != 2:
                raise FileFormatError(path, no, "expected '<a> <b>'")
            try:
                a, b = int(parts[0]), int(parts[1])
            except ValueError:
                raise FileFormatError(path, no, "non-integer edge endpoint") from None
            if not (0 <= a < header[0] and 0 <= b < header[1]):
                raise FileFormatError(path, no, f"edge ({a},{b}) out of range")
            if (a, b) in seen:
                raise FileFormatError(path, no, f"duplicate edge ({a},{b})")
            seen.add((a, b))
            edges.append((a, b))
    if header is None:
        raise FileFormatError(path, 0, "empty graph file")
    if len(edges) != expected:
        raise FileFormatError(path, 0, f"edge count {len(edges)} != declared {expected}")
    return BipartiteGraph.build(header[0], header[1], edges)


# ---------------------------------------------------------------------------
# labelling files
# ---------------------------------------------------------------------------


def write_labelling(path: str, lab: BandwidthLabelling) -> None:
    lines = [
        "# labelling: line t holds the global id of the vertex at position t",
        "# global id 2i = A-side vertex i, 2j+1 = B-side vertex j",
    ]
    for v in lab.order:
        lines.append(str(global_id(v)))
    with open(path, "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def read_labelling(path: str, H: BipartiteGraph) -> BandwidthLabelling:
    ids: list[int] = []
    with open(path) as f:
        for no, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                ids.append(int(line))
            except ValueError:
                raise FileFormatError(path, no, "non-integer vertex id") from None
    total = H.size_a + H.size_b
    if sorted(ids) != list(range(total)):
        raise FileFormatError(path, 0, f"not a permutation of 0..{total - 1}")
    return bandwidth_labelling(H, "given", [from_global_id(g) for g in ids])


# ---------------------------------------------------------------------------
# JSON artifacts
# ---------------------------------------------------------------------------


def rational_str(x) -> str:
    return str(Fraction(x))


def write_json(path: str, obj: dict) -> None:
    with open(path, "w", newline="\n") as f:
        json.dump(obj, f, indent=2)
        f.write("\n")


def read_json(path: str) -> dict:
    with open(path) as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as e:
            raise FileFormatError(path, e.lineno, e.msg) from None


def embedding_to_json(emb: Embedding) -> dict:
    pairs = sorted(
        (global_id(h), global_id(g)) for h, g in emb.mapping.items()
    )
    return {"kind": "embedding", "pairs": [list(p) for p in pairs]}


def embedding_from_json(data: dict) -> Embedding:
    if data.get("kind") != "embedding":
        raise ValueError(f"not an embedding artifact: kind={data.get('kind')!r}")
    mapping = {}
    for h, g in data["pairs"]:
        mapping[from_global_id(int(h))] = from_global_id(int(g))
    return Embedding(mapping)


def cycle_to_json(cycle: HamiltonCycle) -> dict:
    return {"kind": "hamilton-cycle", "order": [global_id(v) for v in cycle.order]}


def cycle_from_json(data: dict) -> HamiltonCycle:
    if data.get("kind") != "hamilton-cycle":
        raise ValueError(f"not a cycle artifact: kind={data.get('kind')!r}")
    return HamiltonCycle(tuple(from_global_id(int(g)) for g in data["order"]))


def homomorphism_to_json(hom: CycleHomomorphism) -> dict:
    return {
        "kind": "cycle-homomorphism",
        "k": hom.k,
        "beta_n": hom.beta_n,
        "phi": list(hom.phi),
        "cluster_of_x": list(hom.cluster_of_x),
        "cluster_of_y": list(hom.cluster_of_y),
        "linking": sorted(global_id(v) for v in hom.linking),
        "preimage_a": list(hom.preimage_a),
        "preimage_b": list(hom.preimage_b),
    }


def homomorphism_from_json(data: dict) -> CycleHomomorphism:
    if data.get("kind") != "cycle-homomorphism":
        raise ValueError(f"not a homomorphism artifact: kind={data.get('kind')!r}")
    return CycleHomomorphism(
        int(data["k"]),
        tuple(int(c) for c in data["cluster_of_x"]),
        tuple(int(c) for c in data["cluster_of_y"]),
        frozenset(from_global_id(int(g)) for g in data["linking"]),
        tuple(int(c) for c in data["preimage_a"]),
        tuple(int(c) for c in data["preimage_b"]),
        int(data["beta_n"]),
        tuple(int(c) for c in data["phi"]),
    )


def run_report_to_json(report) -> dict:
    # stage timings are deliberately omitted so identical seeded runs
    # serialize byte-identically
    return {
        "kind": "run-report",
        "seed": report.seed,
        "verdict": report.verdict,
        "stages": [
            {"stage": s.stage, "ok": s.ok, "detail": s.detail} for s in report.stages
        ],
    }
