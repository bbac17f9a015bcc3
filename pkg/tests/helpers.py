from swarmsim.model import Capacity, ResourceAgent, SortDirection, validate_application


def make_capacity(cid="n1", cpu=16, ram=16, storage=16, **kw):
    base = dict(
        id=cid,
        provider="AWS",
        location="EU",
        cpu_total=cpu,
        ram_total=ram,
        storage_total=storage,
        idle_power=150.0,
        max_power=500.0,
        latency=20.0,
        bandwidth=200.0,
        price_per_hour=0.1,
        reliability=1.0,
    )
    base.update(kw)
    return Capacity(**base)


def agent_for(cap, direction=SortDirection.ASCENDING):
    return ResourceAgent(f"ra-{cap.id}", cap.id, direction)


def compute(cid="c1", cpu=2, ram=2, image_size=100, instances=1, **kw):
    return dict(id=cid, kind="compute", cpu=cpu, ram=ram, image_size=image_size, instances=instances, **kw)


def storage(cid="s1", size=1, **kw):
    return dict(id=cid, kind="storage", storage_size=size, **kw)


def make_app(*components, app_id="app1", **kw):
    return validate_application({"id": app_id, "components": list(components), **kw})
