"""Deterministic simulation harness for synthesized component systems.

Each component runs the send/receive loop of its automaton: at all-send
locations it picks an enabled send and performs the interaction (blocking
rendezvous for synchronous ports, buffered delivery with backpressure for
asynchronous ones); at receive locations it consumes the head of a port
queue; internal and silent transitions execute locally.

Logical concurrency is driven by a cooperative round-robin scheduler. All
remaining nondeterminism (which enabled action a component takes on its
turn) is resolved by a per-component PRNG seeded from the run seed, so a
given (system, seed) pair always reproduces the same trace byte for byte.
Every executed action is one step of the composite-system semantics, which
makes any reachable final state a member of the exhaustive exploration's
terminal set by construction.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

from .cbs import CompositeSystem, SysState, is_terminal, sys_steps_tagged
from .promela import MAX_LEN


@dataclass
class RunResult:
    outcome: str  # "completed" | "deadlock" | "step-limit"
    steps: int
    final: SysState
    events: list = field(default_factory=list)  # serialized JSONL lines


def _actor(sys: CompositeSystem, state: SysState, rule: str, label,
           succ: SysState) -> str:
    """Component that initiated a step (sender for interactions, the moving
    component for local steps)."""
    if rule in ("recv", "internal"):
        for comp, before, after in zip(sys.components, state.locations,
                                       succ.locations):
            if before != after:
                return comp.id
        raise AssertionError("local step moved no component")
    for comp in sys.components:
        for p in comp.ports:
            if p.pid in label and p.is_send:
                return comp.id
    raise AssertionError(f"no sender in label {label}")


def _event_line(step: int, actor: str, rule: str, label, succ: SysState,
                sys: CompositeSystem) -> str:
    ports = sorted(label) if isinstance(label, frozenset) else []
    locs = {c.id: loc for c, loc in zip(sys.components, succ.locations)}
    return json.dumps(
        {"step": step, "comp": actor, "rule": rule, "ports": ports,
         "locations": locs},
        sort_keys=True, separators=(",", ":"))


def simulate(sys: CompositeSystem, seed: int, max_steps: int = 100_000,
             max_chan_len: int = MAX_LEN, collect_events: bool = True) -> RunResult:
    rngs = {c.id: random.Random(f"{seed}:{c.id}") for c in sys.components}
    state = sys.initial_state()
    events = []
    steps = 0
    order = [c.id for c in sys.components]

    while steps < max_steps:
        progressed = False
        for cid in order:
            if steps >= max_steps:
                break
            succs = []
            for rule, label, succ in sys_steps_tagged(sys, state):
                # Backpressure: refuse deliveries that would overfill a queue.
                if any(len(q) > max_chan_len for _, q in succ.buffers):
                    continue
                if _actor(sys, state, rule, label, succ) == cid:
                    succs.append((rule, label, succ))
            if not succs:
                continue
            rule, label, succ = succs[rngs[cid].randrange(len(succs))]
            steps += 1
            if collect_events:
                events.append(_event_line(steps, cid, rule, label, succ, sys))
            state = succ
            progressed = True
        if not progressed:
            break

    if steps >= max_steps and sys_steps_tagged(sys, state):
        outcome = "step-limit"
    elif is_terminal(sys, state):
        outcome = "completed"
    else:
        outcome = "deadlock"
    if collect_events:
        final = {k: state.sigma[k] for k in sorted(state.sigma.keys())}
        events.append(json.dumps(
            {"outcome": outcome, "steps": steps, "final": final},
            sort_keys=True, separators=(",", ":")))
    return RunResult(outcome=outcome, steps=steps, final=state, events=events)


def trace_text(result: RunResult) -> str:
    return "".join(line + "\n" for line in result.events)
