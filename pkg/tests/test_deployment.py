import pytest

from swarmsim.deployment import (
    TASK_DURATION_S,
    DeploymentFailed,
    ImageRegistry,
    complete_unit,
    deploy_application,
    run_workload,
    select_lead_resource,
    select_winner,
)
from swarmsim.model import PriorityVector, QoSVector, SliceState, StateError
from swarmsim.offers import OfferCombination, OfferPair
from swarmsim.ranking import cost_rank
from swarmsim.simkernel import (
    DEPLOY_STEP,
    STORAGE_ATTACHED,
    TASK_COMPLETE,
    TRANSFER_COMPLETE,
    Kernel,
)

from helpers import compute, make_app, make_capacity, storage


def reserve(cap, comp, inst=0, app="app1"):
    if comp.is_compute:
        s = cap.reserve(comp.cpu, comp.ram, 0, (app, comp.id, inst))
    else:
        s = cap.reserve(0, 0, comp.storage_size, (app, comp.id, inst))
    return OfferPair(f"ra-{cap.id}", comp.id, inst, cap.id, s)


def combo(pairs, latency=20):
    return OfferCombination(frozenset(pairs), QoSVector(latency, 1, 100, 1000), 1.0)


class TestSelectWinner:
    def _ranked(self):
        caps = {c: make_capacity(c) for c in ("a", "b", "c")}
        comp = make_app(compute("c1")).components[0]
        offers = [combo([reserve(caps[c], comp)], latency=lat) for c, lat in (("a", 10), ("b", 20), ("c", 30))]
        return caps, cost_rank(offers, PriorityVector(1, 0, 0, 0))

    def test_all_available(self):
        caps, ranked = self._ranked()
        assert select_winner(ranked, None, caps).capacity_ids() == ["a"]
        assert caps["b"].slices == [] and caps["c"].slices == []
        assert caps["a"].slices[0].state is SliceState.RESERVED

    def test_falls_back_to_next(self):
        caps, ranked = self._ranked()
        assert select_winner(ranked, [False, True, True], caps).capacity_ids() == ["b"]
        assert caps["a"].slices == [] and caps["c"].slices == []

    def test_callable_availability(self):
        caps, ranked = self._ranked()
        winner = select_winner(ranked, lambda rank, o: "c" in o.capacity_ids(), caps)
        assert winner.capacity_ids() == ["c"]

    def test_none_available(self):
        caps, ranked = self._ranked()
        with pytest.raises(DeploymentFailed) as exc:
            select_winner(ranked, [False] * 3, caps, application_id="app1")
        assert exc.value.application_id == "app1"
        assert all(c.slices == [] for c in caps.values())


class TestLeadResource:
    def test_most_cores(self):
        caps = {"small": make_capacity("small", cpu=16), "big": make_capacity("big", cpu=100)}
        winner = combo([OfferPair("x", "c1", 0, "small"), OfferPair("y", "c2", 0, "big")])
        assert select_lead_resource(winner, caps) == "big"

    def test_single(self):
        caps = {"only": make_capacity("only")}
        assert select_lead_resource(combo([OfferPair("x", "c1", 0, "only")]), caps) == "only"

    def test_tie_smaller_id(self):
        caps = {"n2": make_capacity("n2", cpu=64), "n1": make_capacity("n1", cpu=64)}
        winner = combo([OfferPair("x", "c1", 0, "n2"), OfferPair("y", "c2", 0, "n1")])
        assert select_lead_resource(winner, caps) == "n1"


def _run_deploy(app, caps, placement, registry=None):
    """Deploy ``app`` with ``placement`` = {unit: capacity id} and drain the kernel."""
    k = Kernel()
    pairs = {}
    for comp, inst in app.placement_units():
        pairs[(comp.id, inst)] = reserve(caps[placement[(comp.id, inst)]], comp, inst, app.id)
    winner = combo(pairs.values())
    lead = select_lead_resource(winner, caps)
    swarm = deploy_application(k, app, winner, lead, registry or ImageRegistry(), caps)

    def ready(event):
        complete_unit(event, swarm, pairs)
        member = (event.payload["capacity"], event.payload["component"], event.payload["instance"])
        if event.kind == TRANSFER_COMPLETE:
            run_workload(k, swarm, member, event.payload["cpu"])

    k.on(TRANSFER_COMPLETE, ready)
    k.on(STORAGE_ATTACHED, ready)
    return k.run_until_idle(), swarm, pairs


class TestDeployApplication:
    def test_single_transfer(self):
        caps = {"n1": make_capacity("n1", bandwidth=1200, latency=15)}
        app = make_app(compute("c1", image_size=500))
        log, swarm, pairs = _run_deploy(app, caps, {("c1", 0): "n1"})
        (t,) = log.of_kind(TRANSFER_COMPLETE)
        assert t.time == pytest.approx(4.015, abs=1e-12)
        assert swarm.deployed_at[("n1", "c1", 0)] == pytest.approx(4.015)
        assert pairs[("c1", 0)].slice_ref.state is SliceState.ALLOCATED

    def test_same_capacity_serialised(self):
        caps = {"n1": make_capacity("n1", bandwidth=1000, latency=15)}
        app = make_app(compute("c1", image_size=100, instances=2))
        log, _, _ = _run_deploy(app, caps, {("c1", 0): "n1", ("c1", 1): "n1"})
        times = [e.time for e in log.of_kind(TRANSFER_COMPLETE)]
        assert times == pytest.approx([0.815, 1.63], abs=1e-12)

    def test_distinct_capacities_concurrent(self):
        caps = {c: make_capacity(c, bandwidth=1000, latency=15) for c in ("n1", "n2")}
        app = make_app(compute("c1", image_size=100, instances=2))
        log, _, _ = _run_deploy(app, caps, {("c1", 0): "n1", ("c1", 1): "n2"})
        assert [e.time for e in log.of_kind(TRANSFER_COMPLETE)] == pytest.approx([0.815, 0.815])

    def test_storage_only(self):
        caps = {"n1": make_capacity("n1")}
        app = make_app(storage("s1", size=4))
        log, swarm, pairs = _run_deploy(app, caps, {("s1", 0): "n1"})
        assert [e.kind for e in log.entries] == [DEPLOY_STEP, STORAGE_ATTACHED]
        assert swarm.deployed_at == {("n1", "s1", 0): 0.0}
        assert log.intervals == [] and not log.of_kind(TASK_COMPLETE)

    def test_lead_launch_is_instant(self):
        caps = {"n1": make_capacity("n1", cpu=16), "n2": make_capacity("n2", cpu=100)}
        app = make_app(compute("c1"), compute("c2"))
        log, swarm, _ = _run_deploy(app, caps, {("c1", 0): "n1", ("c2", 0): "n2"})
        step = log.of_kind(DEPLOY_STEP)[0]
        assert step.time == 0.0 and step.payload["lead"] == "n2" == swarm.lead_capacity
        assert swarm.members == {("n1", "c1", 0), ("n2", "c2", 0)}

    def test_requires_reserved_slices(self):
        caps = {"n1": make_capacity("n1")}
        app = make_app(compute("c1"))
        pair = reserve(caps["n1"], app.components[0])
        pair.slice_ref.transition(SliceState.ASSIGNED)
        with pytest.raises(StateError):
            deploy_application(Kernel(), app, combo([pair]), "n1", ImageRegistry(), caps)

    def test_registry_validation(self):
        with pytest.raises(ValueError):
            ImageRegistry(bandwidth=0)


class TestWorkload:
    def test_utilisation_share(self):
        caps = {"n1": make_capacity("n1", cpu=16)}
        app = make_app(compute("c1", cpu=2))
        log, swarm, _ = _run_deploy(app, caps, {("c1", 0): "n1"})
        (iv,) = log.intervals
        assert iv.cpu_cores_busy / caps["n1"].cpu_total == pytest.approx(0.125)
        assert iv.end - iv.start == TASK_DURATION_S
        assert iv.start == swarm.deployed_at[("n1", "c1", 0)]

    def test_overlapping_units_add(self):
        caps = {"n1": make_capacity("n1", cpu=100)}
        app = make_app(compute("c1", cpu=3, instances=2))
        log, _, _ = _run_deploy(app, caps, {("c1", 0): "n1", ("c1", 1): "n1"})
        a, b = log.intervals
        overlap_start, overlap_end = max(a.start, b.start), min(a.end, b.end)
        assert overlap_end > overlap_start
        assert (a.cpu_cores_busy + b.cpu_cores_busy) / 100 == pytest.approx(0.06)

    def test_last_task_time(self):
        caps = {c: make_capacity(c, latency=lat) for c, lat in (("n1", 20), ("n2", 90))}
        app = make_app(compute("c1"), compute("c2", image_size=450), storage("s1"))
        log, swarm, _ = _run_deploy(app, caps, {("c1", 0): "n1", ("c2", 0): "n2", ("s1", 0): "n1"})
        compute_members = [m for m in swarm.members if m[1] != "s1"]
        want = max(swarm.deployed_at[m] for m in compute_members) + TASK_DURATION_S
        assert max(e.time for e in log.of_kind(TASK_COMPLETE)) == pytest.approx(want)
        assert len(log.of_kind(TASK_COMPLETE)) == 2
