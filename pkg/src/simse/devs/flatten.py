"""Flattening of hierarchical coupled models.

The flat model has one atomic child per leaf of the hierarchy, named by the
dot-joined path from the root, and couplings rewired leaf to leaf.  Coupling
order is kept per source port so same-instant deliveries happen in the same
order as in the hierarchical model.
"""

from __future__ import annotations

from .model import SELF, AtomicSpec, Coupling, CoupledSpec


def _receivers(spec, prefix: tuple, port: str):
    if isinstance(spec, AtomicSpec):
        yield ".".join(prefix), port
        return
    for c in spec.couplings:
        if c.source == SELF and c.source_port == port and c.target != SELF:
            yield from _receivers(spec.child(c.target), prefix + (c.target,), c.target_port)


def _destinations(chain: list, level: int, child: str, port: str):
    spec, prefix = chain[level]
    for c in spec.couplings:
        if c.source != child or c.source_port != port:
            continue
        if c.target == SELF:
            if level == 0:
                yield SELF, c.target_port
            else:
                yield from _destinations(chain, level - 1, prefix[-1], c.target_port)
        else:
            yield from _receivers(spec.child(c.target), prefix + (c.target,), c.target_port)


def flatten(spec: CoupledSpec) -> CoupledSpec:
    """Return an equivalent single-level coupled model."""
    if all(isinstance(child, AtomicSpec) for _, child in spec.children):
        return CoupledSpec(spec.name, tuple(spec.children), spec.ports, tuple(spec.couplings))

    leaves: list[tuple[str, AtomicSpec, list]] = []

    def collect(node: CoupledSpec, prefix: tuple, chain: list) -> None:
        chain = chain + [(node, prefix)]
        for name, child in node.children:
            if isinstance(child, AtomicSpec):
                leaves.append((".".join(prefix + (name,)), child, chain, name))
            else:
                collect(child, prefix + (name,), chain)

    collect(spec, (), [])

    couplings: list[Coupling] = []

    def add(c: Coupling) -> None:
        if c not in couplings:
            couplings.append(c)

    for port in sorted(spec.input_ports()):
        for leaf, lport in _receivers(spec, (), port):
            add(Coupling(SELF, port, leaf, lport))
    for flat_name, atomic, chain, local in leaves:
        for port in sorted(atomic.output_ports()):
            for target, tport in _destinations(chain, len(chain) - 1, local, port):
                add(Coupling(flat_name, port, target, tport))

    children = tuple((name, atomic) for name, atomic, _, _ in leaves)
    return CoupledSpec(spec.name, children, spec.ports, tuple(couplings))
