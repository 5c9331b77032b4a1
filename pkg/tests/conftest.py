import sys
from pathlib import Path

import hypothesis.strategies as st
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

from evsched.core import EV, Horizon, Instance

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@st.composite
def small_instances(draw, max_evs=6, max_T=16, with_cap=False):
    """Random tiny instances; every EV satisfies the window invariants."""
    T = draw(st.integers(min_value=3, max_value=max_T))
    n = draw(st.integers(min_value=1, max_value=max_evs))
    rows = []
    for _ in range(n):
        ar = draw(st.integers(min_value=1, max_value=T))
        d = draw(st.integers(min_value=ar, max_value=T))
        l = draw(st.integers(min_value=1, max_value=d - ar + 1))
        rows.append((ar, d, l))
    rows.sort(key=lambda r: r[0])
    evs = tuple(EV(id=i, ar=ar, d=d, l=l) for i, (ar, d, l) in enumerate(rows, 1))
    cap = None
    if with_cap:
        cap = draw(st.integers(min_value=1, max_value=n))
    return Instance(horizon=Horizon(T=T), evs=evs, cap=cap)


@st.composite
def instances_with_schedules(draw, max_evs=6, max_T=16):
    """An instance plus a random window-feasible schedule for all its EVs."""
    inst = draw(small_instances(max_evs=max_evs, max_T=max_T))
    starts = {}
    for ev in inst.evs:
        starts[ev.id] = draw(st.integers(min_value=ev.ar, max_value=ev.latest_start))
    return inst, starts
