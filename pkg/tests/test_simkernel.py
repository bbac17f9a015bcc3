import pytest
from hypothesis import given
from hypothesis import strategies as st

from swarmsim.simkernel import (
    SUBMIT,
    TASK_COMPLETE,
    EventLog,
    Kernel,
    KernelError,
    SimulationError,
    UtilisationInterval,
    accumulate_energy,
    node_power,
    transfer_duration,
)

from helpers import make_capacity


def test_same_time_event_runs_before_later_ones():
    k = Kernel()
    order = []
    k.on("a", lambda e: order.append("a"))
    k.on("b", lambda e: order.append("b"))
    k.schedule(5, "b")
    k.schedule(0, "a")
    k.run_until_idle()
    assert order == ["a", "b"]


def test_equal_times_keep_scheduling_order():
    k = Kernel()
    seen = []
    for name in "xyz":
        k.on(name, lambda e: seen.append(e.kind))
    for name in "zxy":
        k.schedule(1.0, name)
    k.run_until_idle()
    assert seen == ["z", "x", "y"]


def test_scheduling_in_the_past_fails():
    k = Kernel()
    k.on("tick", lambda e: k.schedule(k.now - 1, "late"))
    k.schedule(10, "tick")
    with pytest.raises(KernelError):
        k.run_until_idle()


def test_empty_queue():
    k = Kernel()
    log = k.run_until_idle()
    assert log.entries == [] and k.now == 0.0


def test_single_task_complete():
    k = Kernel()
    k.schedule(1800, TASK_COMPLETE)
    log = k.run_until_idle()
    assert len(log.entries) == 1 and k.now == 1800


def test_handler_error_carries_partial_log():
    k = Kernel()
    k.schedule(1, "ok")

    def boom(e):
        raise ValueError("bad")

    k.on("bad", boom)
    k.schedule(2, "bad")
    with pytest.raises(SimulationError) as exc:
        k.run_until_idle()
    assert [e.kind for e in exc.value.log.entries] == ["ok", "bad"]


def test_clock_never_moves_backward():
    k = Kernel()
    times = []
    k.on("e", lambda ev: times.append(k.now))
    for t in (3, 1, 4, 1, 5, 9, 2, 6):
        k.schedule(t, "e")
    k.run_until_idle()
    assert times == sorted(times)


class TestTransferDuration:
    def test_image(self):
        assert transfer_duration(500, 1000, 15) == pytest.approx(4.015, abs=1e-12)

    def test_zero_size(self):
        assert transfer_duration(0, 123, 20) == pytest.approx(0.020, abs=1e-12)

    def test_message(self):
        assert transfer_duration(0.002, 50, 100) == pytest.approx(0.10032, abs=1e-12)

    def test_zero_bandwidth(self):
        with pytest.raises(ValueError):
            transfer_duration(1, 0, 0)

    @given(
        st.floats(0, 1000),
        st.floats(0, 1000),
        st.floats(1, 2000),
        st.floats(0, 500),
        st.floats(0, 500),
    )
    def test_monotone(self, size, extra, bw, lat, extra_lat):
        base = transfer_duration(size, bw, lat)
        assert transfer_duration(size + extra, bw, lat) >= base
        assert transfer_duration(size, bw, lat + extra_lat) >= base
        assert transfer_duration(size, bw * 2, lat) <= base


class TestNodePower:
    cap = make_capacity()

    @pytest.mark.parametrize("u,watts", [(0, 150), (1, 500), (0.5, 325)])
    def test_linear(self, u, watts):
        assert node_power(self.cap, u) == pytest.approx(watts)

    @pytest.mark.parametrize("u", [-0.1, 1.1])
    def test_out_of_range(self, u):
        with pytest.raises(ValueError):
            node_power(self.cap, u)


def _log(end, intervals=(), start=0.0):
    k = Kernel()
    k.schedule(start, SUBMIT, {"app": "a"})
    k.schedule(end, TASK_COMPLETE, {"app": "a"})
    log = k.run_until_idle()
    log.intervals.extend(intervals)
    return log


class TestAccumulateEnergy:
    def test_idle_hour(self):
        cap = make_capacity()
        assert accumulate_energy(_log(3600), [cap]) == {"n1": pytest.approx(0.15)}

    def test_half_busy(self):
        cap = make_capacity()
        # fully busy = every core, i.e. cpu_total cores
        log = _log(3600, [UtilisationInterval("n1", 0, 1800, cap.cpu_total)])
        assert accumulate_energy(log, [cap])["n1"] == pytest.approx(0.325, rel=1e-12)

    def test_empty_log(self):
        assert accumulate_energy(EventLog(), [make_capacity()]) == {}

    def test_no_submission_is_zero(self):
        k = Kernel()
        k.schedule(10, "other")
        log = k.run_until_idle()
        assert accumulate_energy(log, [make_capacity()]) == {"n1": 0.0}

    def test_window_excludes_time_before_first_submission(self):
        cap = make_capacity()
        log = _log(3700, start=100)
        assert accumulate_energy(log, [cap])["n1"] == pytest.approx(0.15)
