import pytest

from swarmsim.deployment import TASK_DURATION_S
from swarmsim.model import PriorityVector, SliceState
from swarmsim.offers import message_delay
from swarmsim.scenario import generate_scenario
from swarmsim.simkernel import (
    APPLICATION_REJECTED,
    RESPONSE_ARRIVAL,
    RESUBMIT,
    SUBMIT,
    TASK_COMPLETE,
    TRANSFER_COMPLETE,
)
from swarmsim.simulation import Simulation, simulate

from helpers import compute, make_app, make_capacity, storage


def small_scenario():
    caps = [
        make_capacity("n1", cpu=16, latency=15, bandwidth=1000, price_per_hour=0.5),
        make_capacity("n2", cpu=32, ram=32, latency=80, bandwidth=100, price_per_hour=0.1),
        make_capacity("n3", cpu=8, ram=8, latency=40, bandwidth=400, price_per_hour=1.0),
    ]
    app = make_app(compute("c1", cpu=2, instances=2), compute("c2", cpu=3), storage("s1", size=2))
    return caps, [app]


def test_single_app_deploys_and_runs():
    caps, apps = small_scenario()
    res = simulate(caps, apps, seed=1)
    assert res.rejected == []
    swarm = res.swarms["app1"]
    assert len(swarm.members) == 4
    assert swarm.lead_capacity in {m[0] for m in swarm.members}
    assert len(res.log.of_kind(TASK_COMPLETE)) == 3
    # every slice still bound belongs to the winning swarm and is allocated
    bound = {
        (cid, s.bound_component[1], s.bound_component[2])
        for cid, cap in res.capacities.items()
        for s in cap.slices
    }
    assert bound == set(swarm.members)
    assert all(s.state is SliceState.ALLOCATED for cap in res.capacities.values() for s in cap.slices)


def test_input_capacities_untouched():
    caps, apps = small_scenario()
    simulate(caps, apps, seed=1)
    assert all(c.slices == [] for c in caps)


def test_units_deploy_after_offer_round_trip():
    caps, apps = small_scenario()
    res = simulate(caps, apps, seed=4)
    submit = res.log.of_kind(SUBMIT)[0].time
    last_response = max(e.time for e in res.log.of_kind(RESPONSE_ARRIVAL))
    for t in res.swarms["app1"].deployed_at.values():
        assert t >= last_response > submit


def test_last_response_comes_from_slowest_agent():
    caps, apps = small_scenario()
    sim = Simulation(caps, apps, seed=2)
    res = sim.run()
    gateway = sim.agent_by_id[res.gateways["app1"]]
    by_agent = {e.payload["agent"]: e.time for e in res.log.of_kind(RESPONSE_ARRIVAL)}
    gw_cap = sim.capacities[gateway.capacity_id]
    slowest = max(sim.agents, key=lambda a: message_delay(sim.capacities[a.capacity_id], gw_cap))
    assert max(by_agent, key=by_agent.get) == slowest.id


def test_priorities_override():
    caps, apps = small_scenario()
    sim = Simulation(caps, apps, priorities=PriorityVector(0, 1, 0, 0))
    assert sim.applications[0].priorities == PriorityVector(0, 1, 0, 0)


def test_price_priority_picks_cheap_capacity():
    caps, apps = small_scenario()
    res = simulate(caps, apps, priorities=PriorityVector(0, 1, 0, 0))
    assert {m[0] for m in res.swarms["app1"].members} == {"n2"}


@pytest.mark.parametrize("method", ["cost", "borda", "random"])
def test_deterministic(method):
    caps, apps = generate_scenario(3)
    a = simulate(caps, apps, method=method, seed=3)
    b = simulate(caps, apps, method=method, seed=3)
    assert a.log.to_ndjson() == b.log.to_ndjson()


def test_availability_fallback():
    caps, apps = small_scenario()
    base = simulate(caps, apps, seed=1, priorities=PriorityVector(0, 1, 0, 0))
    skip_first = simulate(
        caps, apps, seed=1, priorities=PriorityVector(0, 1, 0, 0), availability=lambda app, rank, offer: rank > 0
    )
    assert skip_first.rejected == []
    assert skip_first.swarms["app1"].members != base.swarms["app1"].members


def test_no_available_offer_rejects_and_frees():
    caps, apps = small_scenario()
    res = simulate(caps, apps, seed=1, availability=lambda app, rank, offer: False)
    assert res.rejected == ["app1"]
    assert res.log.of_kind(APPLICATION_REJECTED)[0].payload["app"] == "app1"
    assert all(cap.slices == [] for cap in res.capacities.values())
    assert not res.log.of_kind(TRANSFER_COMPLETE)


def test_exhausted_infrastructure_rejects_late_app():
    caps = [make_capacity("n1", cpu=16, ram=16)]
    apps = [make_app(compute("c1", cpu=10), app_id="a1"), make_app(compute("c1", cpu=10), app_id="a2", submit_time=5)]
    res = simulate(caps, apps, check_invariants=True)
    assert "a1" in res.swarms and res.rejected == ["a2"]


def test_concurrent_apps_retry_until_deployed():
    # both apps reserve on both nodes at once; the loser must retry after the winner releases
    caps = [make_capacity("n1", cpu=9, ram=9), make_capacity("n2", cpu=9, ram=9)]
    apps = [
        make_app(compute("c1", cpu=4), compute("c2", cpu=4), app_id="a1"),
        make_app(compute("c1", cpu=4), compute("c2", cpu=4), app_id="a2"),
    ]
    res = simulate(caps, apps, check_invariants=True)
    assert res.rejected == []
    assert set(res.swarms) == {"a1", "a2"}
    assert [e.payload["app"] for e in res.log.of_kind(RESUBMIT)] == ["a2"]


def test_unit_level_combinations():
    caps, apps = small_scenario()
    res = simulate(caps, apps, bundle_instances=False, check_invariants=True)
    assert res.rejected == []
    # 3 agents, 4 units, every agent can host every unit: 3**4 combinations
    assert res.offer_counts["app1"] == 81


@pytest.mark.parametrize("seed", range(4))
def test_generated_scenarios_with_invariant_checks(seed):
    caps, apps = generate_scenario(seed)
    res = simulate(caps, apps, seed=seed, check_invariants=True)
    assert res.rejected == []
    done = res.log.of_kind(TASK_COMPLETE)
    last = max(t for s in res.swarms.values() for (c, comp, i), t in s.deployed_at.items() if comp.startswith("c"))
    assert max(e.time for e in done) == pytest.approx(last + TASK_DURATION_S)


def test_constructor_validation():
    caps, apps = small_scenario()
    with pytest.raises(ValueError):
        Simulation([], apps)
    with pytest.raises(ValueError):
        Simulation(caps + [caps[0]], apps)
    with pytest.raises(ValueError):
        Simulation(caps, apps + apps)
