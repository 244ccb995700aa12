import streamlit as st

from components import charts
from components.krawtchouk_view import parse_p
from models import Reports, RunConfig
from utils.errors import DualityLabError
from utils.krawtchouk import kappa_from_p
from utils.liealg import check_casimir_generator, expected_c
from utils.suites import lie_suite, resolve


@st.cache_data
def lie_checks(graph_name, p_text, two_j, seed):
    config = RunConfig(command='lie-checks', graph=graph_name, two_j=two_j, from_p=tuple(parse_p(p_text)),
                       seed=seed, trials=5)
    records = lie_suite(resolve(config))
    return Reports.to_frame(records)


@st.cache_data
def casimir_constant(p_text, two_j):
    kappa = kappa_from_p(parse_p(p_text))
    c, record = check_casimir_generator(kappa, two_j)
    return c, expected_c(kappa.n, two_j), record.residual


def render_lie_view(graph_name, p_text, two_j):
    st.subheader("sl(n+1) and Heisenberg representations")
    seed = st.number_input("Seed", min_value=0, value=0, step=1)
    try:
        frame = lie_checks(graph_name, p_text, two_j, int(seed))
        c, closed_form, residual = casimir_constant(p_text, two_j)
    except (DualityLabError, ValueError, ZeroDivisionError) as e:
        st.error(str(e))
        return

    col1, col2, col3 = st.columns(3)
    col1.metric("Measured c", f"{c:.10g}")
    col2.metric("(2j)^2 n/(n+1)", f"{closed_form:.10g}")
    col3.metric("Generator residual", f"{residual:.3e}")

    st.dataframe(frame, hide_index=True, use_container_width=True)
    charts.show(charts.residual_bars(frame, "Lie-algebra residuals"))
