import numpy as np
import streamlit as st
from scipy.sparse.linalg import expm_multiply

from components import charts
from components.krawtchouk_view import parse_p
from utils.errors import DualityLabError
from utils.generators import sep_generator
from utils.krawtchouk import kappa_from_p
from utils.simulate import empirical_distribution, final_states, gillespie_run, mc_duality_test
from utils.statespace import enumerate_sep, preset_graph
from utils.verify import build_sep_duality


@st.cache_data
def run_simulation(graph_name, p_text, two_j, horizon, samples, seed, start, dual_start):
    kappa = kappa_from_p(parse_p(p_text))
    space = enumerate_sep(preset_graph(graph_name), kappa.n, two_j)
    gen = sep_generator(space)
    start, dual_start = start % space.size, dual_start % space.size
    path = gillespie_run(gen, start, horizon, seed)
    result = mc_duality_test(gen, gen, build_sep_duality(space, kappa), start, dual_start, horizon, samples, seed)
    empirical = exact = None
    if space.size <= 200:
        empirical = empirical_distribution(final_states(gen, start, horizon, samples, seed), space.size)
        point = np.zeros(space.size)
        point[start] = 1.0
        exact = expm_multiply(horizon * gen.matrix.T.tocsr(), point)
    return space.describe(), path, result, empirical, exact


def render_simulation_view(graph_name, p_text, two_j):
    st.subheader("Monte Carlo duality")
    col1, col2, col3 = st.columns(3)
    with col1:
        horizon = st.number_input("T", min_value=0.0, value=0.5, step=0.1)
    with col2:
        samples = st.select_slider("Samples", options=[1_000, 5_000, 10_000, 50_000, 100_000], value=10_000)
    with col3:
        seed = st.number_input("Seed", min_value=0, value=0, step=1, key='mc_seed')
    col4, col5 = st.columns(2)
    with col4:
        start = st.number_input("Forward start rank", min_value=0, value=1, step=1)
    with col5:
        dual_start = st.number_input("Dual start rank", min_value=0, value=2, step=1)

    try:
        description, path, result, empirical, exact = run_simulation(
            graph_name, p_text, two_j, float(horizon), int(samples), int(seed), int(start), int(dual_start))
    except (DualityLabError, ValueError, ZeroDivisionError) as e:
        st.error(str(e))
        return

    st.caption(description)
    m1, m2, m3, m4 = st.columns(4)
    m1.metric("Forward mean", f"{result.mean_forward:.5f}", f"± {result.stderr_forward:.1e}")
    m2.metric("Dual mean", f"{result.mean_dual:.5f}", f"± {result.stderr_dual:.1e}")
    m3.metric("Exact", "n/a" if result.exact is None else f"{result.exact:.5f}")
    m4.metric("max z", f"{result.max_z:.3f}")
    if result.max_z > 4:
        st.warning("z-statistic above 4: estimates disagree beyond the 4-sigma gate")

    charts.show(charts.trajectory_plot(path))
    if empirical is not None:
        charts.show(charts.distribution_bars(empirical, exact))
