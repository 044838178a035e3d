"""Tests for controller-free synthesis of component systems."""

import pytest

from chorc.cbs import check_structure
from chorc.synthesis import PROFILES, SynthError, synthesize

from conftest import load_stem


def synth_stem(stem, profile="default"):
    decl, _, ch = load_stem(stem)
    return decl, ch, synthesize(decl, ch, profile)


def comp(sys, cid):
    return next(c for c in sys.components if c.id == cid)


def used_ports(c):
    return {t.port.name for t in c.transitions if t.port is not None}


class TestShape:
    def test_no_controllers(self, corpus):
        # The synthesized system contains exactly the declared components.
        from chorc.synthesis import synthesize as synth
        for path, decl, name, ch in corpus:
            for profile in PROFILES:
                sys = synth(decl, ch, profile)
                assert tuple(c.id for c in sys.components) == decl.component_ids(), path

    def test_structure_clean_on_corpus(self, corpus):
        for path, decl, name, ch in corpus:
            for profile in PROFILES:
                sys = synthesize(decl, ch, profile)
                assert check_structure(sys) == [], (path, profile)

    def test_every_component_has_init_and_end(self, corpus):
        for path, decl, name, ch in corpus:
            sys = synthesize(decl, ch)
            for c in sys.components:
                assert c.init in c.locations
                assert c.end in c.locations

    def test_deterministic_output(self):
        from chorc.cbs import serialize_system
        decl, ch, sys = synth_stem("buying")
        _, _, sys2 = synth_stem("buying")
        assert serialize_system(sys) == serialize_system(sys2)


class TestToyShape:
    """The producer/consumer pair pins the exact expected structure."""

    def test_p1_locations_and_ports(self):
        decl, ch, sys = synth_stem("producer_consumer")
        p1 = comp(sys, "P1")
        assert len(p1.locations) == 6
        # Five ports drive the automaton: the loop-entry copy of cond, the
        # loop break, the stream copy of s, the incoming ack copy and the
        # sequencing receive.
        assert used_ports(p1) == {"cond#1", "brk@1", "s#1", "ack#1", "cr@1"}

    def test_pairs_are_interaction_disjoint(self):
        decl, ch, sys = synth_stem("producer_consumer")
        pair1, pair2 = {"P1", "C1"}, {"P2", "C2"}
        for inter in sys.gamma:
            owners = {inter.send.owner} | {r.owner for r in inter.receivers}
            assert owners <= pair1 or owners <= pair2


class TestBuyingCounts:
    def test_default_profile_interaction_count(self):
        _, _, sys = synth_stem("buying", "default")
        assert len(sys.gamma) == 21

    def test_compat_profile_interaction_count(self):
        _, _, sys = synth_stem("buying", "compat")
        assert len(sys.gamma) == 27

    def test_compat_seller_arm_count(self):
        _, _, sys = synth_stem("buying", "compat")
        seller = comp(sys, "S")
        # 14 locations with outgoing behavior plus the end location.
        assert len(seller.locations) == 15
        assert seller.end in seller.locations
        assert not [t for t in seller.transitions if t.src == seller.end]


class TestControlMachinery:
    def test_branch_uses_fresh_control_ports(self):
        decl, ch, sys = synth_stem("branch_two")
        names = {t.port.name for c in sys.components
                 for t in c.transitions if t.port is not None}
        assert any(n.startswith("br@") for n in names)

    def test_default_profile_branch_join_is_epsilon(self):
        _, _, sys = synth_stem("branch_two", "default")
        assert any(t.port is None for c in sys.components for t in c.transitions)

    def test_compat_profile_branch_join_merges(self):
        _, _, sys = synth_stem("branch_two", "compat")
        assert not any(t.port is None for c in sys.components
                       for t in c.transitions)

    def test_loop_backedges_and_break(self):
        _, _, sys = synth_stem("loop_countdown")
        names = {t.port.name for c in sys.components
                 for t in c.transitions if t.port is not None}
        assert any(n.startswith("cont@") for n in names)
        assert any(n.startswith("brk@") for n in names)
        assert any(t.port is None for c in sys.components for t in c.transitions)

    def test_port_copies_are_single_use(self, corpus):
        # Every synthesized send-port copy occurs in exactly one interaction.
        for path, decl, name, ch in corpus:
            sys = synthesize(decl, ch)
            seen = {}
            for inter in sys.gamma:
                seen[inter.send.pid] = seen.get(inter.send.pid, 0) + 1
            assert all(n == 1 for n in seen.values()), path

    def test_control_variables_shadow_user_state(self):
        decl, ch, sys = synth_stem("branch_two")
        declared = {v.qname for c in decl.components for v, _ in c.vars}
        for c in sys.components:
            for v, _ in c.vars:
                assert v.qname in declared or v.name.startswith("%")


class TestSeqSync:
    def test_skipped_when_receiver_carries_the_chain(self):
        # Each stage's receiver is the next stage's sender, so the default
        # profile never needs an extra synchronization.
        _, _, sys = synth_stem("seq_chain", "default")
        names = {t.port.name for c in sys.components
                 for t in c.transitions if t.port is not None}
        assert not any(n.startswith(("cs@", "cr@")) for n in names)

    def test_inserted_when_anchor_missing_from_starts(self):
        _, _, sys = synth_stem("producer_consumer", "default")
        names = {t.port.name for c in sys.components
                 for t in c.transitions if t.port is not None}
        assert any(n.startswith("cs@") for n in names)
        assert any(n.startswith("cr@") for n in names)

    def test_profiles_may_disagree_on_sync_placement(self):
        _, _, d = synth_stem("seq_pingpong", "default")
        _, _, c = synth_stem("seq_pingpong", "compat")
        # The ping-pong chain needs no sync under the default ends, but the
        # compat ends anchor on the sender and add one.
        assert len(c.gamma) == len(d.gamma) + 1


class TestErrors:
    def test_bad_profile_rejected(self):
        decl, _, ch = load_stem("nil")
        with pytest.raises((SynthError, ValueError, AssertionError)):
            synthesize(decl, ch, "nope")
