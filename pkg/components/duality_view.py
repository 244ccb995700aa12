import streamlit as st

from components import charts
from components.krawtchouk_view import parse_p
from models import Reports
from utils import parse_number
from utils.errors import DualityLabError
from utils.generators import check_detailed_balance, irw_generator, irw_weight, sep_generator, sep_weight
from utils.krawtchouk import kappa_from_p
from utils.statespace import enumerate_irw_sector, enumerate_sep, preset_graph
from utils.suites import reversibility_record
from utils.verify import build_irw_duality, build_sep_duality, verify_irw, verify_sep

HEATMAP_LIMIT = 400


@st.cache_data
def sep_duality(graph_name, p_text, two_j):
    kappa = kappa_from_p(parse_p(p_text))
    space = enumerate_sep(preset_graph(graph_name), kappa.n, two_j)
    gen = sep_generator(space)
    records = [
        verify_sep(space, kappa),
        reversibility_record('sep-detailed-balance', space,
                             check_detailed_balance(gen, sep_weight(space, kappa.p), measure='w_p')),
    ]
    matrix = build_sep_duality(space, kappa).dense() if space.size <= HEATMAP_LIMIT else None
    return Reports.to_frame(records, timings=True), space.describe(), matrix


@st.cache_data
def irw_duality(graph_name, n, totals, totals_b, lam_text):
    lam = float(parse_number(lam_text))
    graph = preset_graph(graph_name)
    space_a = enumerate_irw_sector(graph, n, totals)
    space_b = enumerate_irw_sector(graph, n, totals_b)
    gen = irw_generator(space_a)
    records = [
        verify_irw(space_a, space_b, lam),
        reversibility_record('irw-detailed-balance', space_a,
                             check_detailed_balance(gen, irw_weight(space_a, lam), measure='mu_lambda')),
    ]
    big = max(space_a.size, space_b.size) > HEATMAP_LIMIT
    matrix = None if big else build_irw_duality(space_a, space_b, lam).dense()
    return Reports.to_frame(records, timings=True), space_a.describe(), matrix


def render_duality_view(graph_name, p_text, two_j):
    st.subheader("Generator-level self-duality")
    tab1, tab2 = st.tabs(["SEP(2j)", "IRW"])

    with tab1:
        try:
            frame, description, matrix = sep_duality(graph_name, p_text, two_j)
        except (DualityLabError, ValueError, ZeroDivisionError) as e:
            st.error(str(e))
        else:
            st.caption(description)
            st.dataframe(frame, hide_index=True, use_container_width=True)
            if matrix is None:
                st.info(f"Duality matrix has more than {HEATMAP_LIMIT} rows; heatmap skipped.")
            else:
                charts.show(charts.duality_heatmap(matrix, "D(xi, eta)"))

    with tab2:
        try:
            n = len(parse_p(p_text)) - 1
        except (ValueError, ZeroDivisionError) as e:
            st.error(f"Invalid family: {e}")
            return
        col1, col2, col3 = st.columns(3)
        with col1:
            totals = st.text_input("Totals", value=','.join(['1'] * n))
        with col2:
            totals_b = st.text_input("Dual totals", value=totals)
        with col3:
            lam_text = st.text_input("lambda", value="1", key='irw_lambda')
        try:
            parsed = tuple(int(t) for t in totals.split(','))
            parsed_b = tuple(int(t) for t in totals_b.split(','))
            frame, description, matrix = irw_duality(graph_name, n, parsed, parsed_b, lam_text)
        except (DualityLabError, ValueError, ZeroDivisionError) as e:
            st.error(str(e))
            return
        st.caption(description)
        st.dataframe(frame, hide_index=True, use_container_width=True)
        if matrix is not None:
            charts.show(charts.duality_heatmap(matrix, "prod e^lambda C(xi, eta)"))
