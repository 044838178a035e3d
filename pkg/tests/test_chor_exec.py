"""Oracle tests for the choreography small-step semantics.

Each named rule has a dedicated test whose expected successor set is written
out by hand against the definitions; the final test measures rule-tag
coverage over the whole corpus.
"""

from chorc.chorsem import (
    CHOR_RULES, TAU, Final, Running, chor_steps_tagged, explore,
    initial_config,
)
from chorc.lang import Seq
from chorc.parser import parse_source

DECLS = """
comp A {
  var x: int = 2;
  var b: bool = true;
  port p: ss of int binds x;
  port a: as of int binds x;
  port d: ss of bool binds b;
}
comp B {
  var y: int = 0;
  var c: bool = true;
  port r: r of int binds y;
  port s: ss of int binds y;
  port d: ss of bool binds c;
}
comp C {
  var z: int = 0;
  port r: r of int binds z;
}
comp D {
  var w: int = 0;
  port r: r of int binds w;
  port s: ss of int binds w;
}
"""


def setup(body):
    decl, _, ch = parse_source(DECLS + f"choreography t = {body}")
    return ch, decl.initial_valuation()


def steps(body):
    ch, sigma = setup(body)
    return chor_steps_tagged(initial_config(ch, sigma)), sigma


class TestNil:
    def test_nil_terminates_silently(self):
        succs, sigma = steps("nil")
        assert succs == [(("nil",), TAU, Final(sigma))]


class TestSynchSendRcv:
    def test_transfer_then_sender_then_receiver_updates(self):
        succs, sigma = steps("A.p[x > 0, x := x - 1] -> { B.r[y := y * 10] }")
        assert len(succs) == 1
        tags, label, succ = succs[0]
        assert tags == ("synch-sendrcv",)
        assert label == frozenset({"A.p", "B.r"})
        # y receives x=2, then the sender update runs, then the receiver's.
        expect = sigma.set("B.y", 20).set("A.x", 1)
        assert succ == Final(expect)

    def test_false_guard_blocks(self):
        succs, _ = steps("A.p[x < 0] -> { B.r }")
        assert succs == []

    def test_multicast(self):
        succs, sigma = steps("A.p -> { B.r, C.r }")
        (_, label, succ), = succs
        assert label == frozenset({"A.p", "B.r", "C.r"})
        assert succ == Final(sigma.set("B.y", 2).set("C.z", 2))


class TestAsynchSendRcv1:
    def test_send_captures_value_before_sender_update(self):
        succs, sigma = steps("A.a[x > 0, x := 0] -> { B.r[y := y + 1] }")
        (tags, label, succ), = succs
        assert tags == ("asynch-sendrcv-1",)
        assert label == frozenset({"A.a"})  # receivers are not synchronized
        assert isinstance(succ, Running) and succ.term is None
        assert succ.sigma["A.x"] == 0  # sender update applied
        ((chan, queue),) = succ.pending
        assert chan == ("A.a", "B.r")
        (port, update, value), = queue
        assert port.pid == "B.r"
        assert value == 2  # captured before x := 0

    def test_two_sends_queue_fifo(self):
        succs, _ = steps("A.a[true, x := x + 1] -> { B.r } ; A.a -> { B.r }")
        (_, _, mid), = succs
        succs2 = chor_steps_tagged(mid)
        send2 = [s for t, _, s in succs2 if "asynch-sendrcv-1" in t]
        assert send2, "second send must be possible before delivery"
        ((chan, queue),) = send2[0].pending
        # First send captures x=2 before its own update; the second sees 3.
        assert [val for _, _, val in queue] == [2, 3]


class TestAsynchSendRcv2:
    def test_delivery_sets_variable_then_update(self):
        succs, _ = steps("A.a -> { B.r[y := y + 1] }")
        (_, _, mid), = succs
        succs2 = chor_steps_tagged(mid)
        (tags, label, succ), = succs2
        assert tags == ("asynch-sendrcv-2",)
        assert label == frozenset({"B.r"})
        assert isinstance(succ, Final)
        assert succ.sigma["B.y"] == 3  # y := 2 then y := y + 1

    def test_only_queue_heads_are_deliverable(self):
        succs, _ = steps("A.a[true, x := 5] -> { B.r } ; A.a -> { B.r }")
        (_, _, mid), = succs
        # Take the second send as well: queue now holds [2, 5].
        send2 = [s for t, _, s in chor_steps_tagged(mid)
                 if "asynch-sendrcv-1" in t]
        state = send2[0]
        deliveries = [s for t, _, s in chor_steps_tagged(state)
                      if t == ("asynch-sendrcv-2",)]
        assert len(deliveries) == 1  # one channel, one head
        assert deliveries[0].sigma["B.y"] == 2

    def test_final_only_when_pool_drains(self):
        succs, _ = steps("A.a -> { B.r } ; A.a -> { C.r }")
        (_, _, s1), = succs
        # Deliver to B before the second send: still Running (term remains).
        d = [s for t, _, s in chor_steps_tagged(s1)
             if t == ("asynch-sendrcv-2",)]
        assert all(isinstance(s, Running) for s in d)


class TestMasterBranching:
    def test_only_true_guards_offered(self):
        succs, _ = steps(
            "choice A { A.d[b] => nil | A.d[not b] => A.p -> { B.r } }")
        assert len(succs) == 1
        tags, label, succ = succs[0]
        assert tags == ("master-branching",)
        assert label == frozenset({"A.d"})

    def test_nondeterministic_when_both_hold(self):
        succs, _ = steps("choice A { A.d => nil | A.d => nil }")
        assert len(succs) == 2

    def test_choice_update_applied(self):
        succs, sigma = steps("choice A { A.d[b, b := not b] => nil }")
        (_, _, succ), = succs
        assert succ.sigma["A.b"] is False


class TestIterative:
    def test_true_guard_unfolds_to_seq(self):
        succs, sigma = steps("while (A.p[x > 0, x := x - 1]) { B.s -> { C.r } }")
        (tags, label, succ), = succs
        assert tags == ("iterative-tt",)
        assert label == frozenset({"A.p"})
        assert isinstance(succ.term, Seq)
        assert succ.sigma["A.x"] == 1

    def test_false_guard_terminates(self):
        succs, sigma = steps("while (A.p[x < 0]) { B.s -> { C.r } }")
        (tags, label, succ), = succs
        assert tags == ("iterative-ff",)
        assert label == TAU
        assert succ == Final(sigma)


class TestSequential:
    def test_seq1_first_keeps_running(self):
        succs, _ = steps(
            "( A.p -> { B.r } ; B.s -> { C.r } ) ; D.s -> { C.r }")
        (tags, _, succ), = succs
        assert tags == ("sequential-1", "sequential-2", "synch-sendrcv")
        assert isinstance(succ.term, Seq)

    def test_seq2_first_terminates(self):
        succs, _ = steps("A.p -> { B.r } ; B.s -> { C.r }")
        (tags, _, succ), = succs
        assert tags == ("sequential-2", "synch-sendrcv")
        # The residual term is exactly the second operand.
        assert succ.term == setup("B.s -> { C.r }")[0]


class TestParallel:
    def test_par1_and_par2_interleave_independent_operands(self):
        succs, _ = steps(
            "( A.p -> { B.r } ; B.s -> { A.p } ) || ( C.r ; nil )"
            .replace("( C.r ; nil )", "( while (D.s[w < 1, w := w + 1]) { D.s -> { C.r } } ; nil )"))
        chains = {t[0] for t, _, _ in succs}
        assert "parallel-1" in chains and "parallel-2" in chains

    def test_par3_left_terminates_to_right(self):
        succs, _ = steps("( A.p -> { B.r } ) || ( D.s -> { C.r } )")
        left = [s for t, _, s in succs if t[0] == "parallel-3"]
        assert left and left[0].term == setup("D.s -> { C.r }")[0]

    def test_par4_right_terminates_to_left(self):
        succs, _ = steps("( A.p -> { B.r } ) || ( D.s -> { C.r } )")
        right = [s for t, _, s in succs if t[0] == "parallel-4"]
        assert right and right[0].term == setup("A.p -> { B.r }")[0]

    def test_dependent_operands_run_left_first(self):
        # Both operands involve A: only the left may move.
        succs, _ = steps("( A.p -> { B.r } ) || ( A.p -> { C.r } )")
        assert {t[0] for t, _, _ in succs} == {"parallel-3"}


class TestBruteForceCrossCheck:
    def brute(self, ch, sigma, fuel=10000):
        """Independent oracle: depth-first closure collecting finals."""
        finals = set()
        seen = set()
        stack = [initial_config(ch, sigma)]
        while stack and fuel:
            fuel -= 1
            cfg = stack.pop()
            if cfg in seen:
                continue
            seen.add(cfg)
            for _, _, succ in chor_steps_tagged(cfg):
                if isinstance(succ, Final):
                    finals.add(succ.sigma)
                else:
                    stack.append(succ)
        assert fuel, "fuel exhausted"
        return finals

    def test_explore_matches_brute_force(self, corpus):
        for path, decl, name, ch in corpus:
            sigma = decl.initial_valuation()
            res = explore(ch, sigma)
            assert not res.truncated, path
            assert res.finals == self.brute(ch, sigma, fuel=500_000), path


class TestRuleCoverage:
    def test_corpus_covers_every_rule(self, corpus):
        seen = set()
        for path, decl, name, ch in corpus:
            res = explore(ch, decl.initial_valuation())
            seen |= res.rules_seen
        missing = set(CHOR_RULES) - seen
        assert not missing, f"rules never exercised by the corpus: {missing}"
