import numpy as np
import pandas as pd
import streamlit as st

from components import charts
from models import Reports
from utils import format_number, parse_number
from utils.charlier import charlier_table, check_charlier_orthogonality, check_raising_lowering
from utils.errors import DualityLabError
from utils.krawtchouk import (check_kappa, check_role_swap, check_routes, kappa_from_p, krawtchouk_table,
                              orthogonality_sums)
from utils.statespace import local_states


def parse_p(text):
    return [parse_number(part) for part in text.split(',') if part.strip()]


@st.cache_data
def krawtchouk_checks(p_text, two_j):
    kappa = kappa_from_p(parse_p(p_text))
    records = [check_kappa(kappa), check_routes(kappa, two_j), orthogonality_sums(kappa, two_j),
               check_role_swap(kappa, two_j)]
    family = pd.DataFrame({
        'p': [format_number(x) for x in kappa.p],
        'p_hat': [format_number(x) for x in kappa.p_hat],
    })
    u = pd.DataFrame([[format_number(x) for x in row] for row in kappa.u])
    return Reports.to_frame(records), family, u, np.asarray(krawtchouk_table(kappa, two_j))


@st.cache_data
def charlier_checks(lam_text, m_max, z_max):
    lam = parse_number(lam_text)
    records = [check_charlier_orthogonality(lam, m_max), check_raising_lowering(lam, m_max, z_max)]
    return Reports.to_frame(records), np.asarray(charlier_table(m_max, z_max, lam))


def render_krawtchouk_view(p_text, two_j):
    st.subheader("Multivariate Krawtchouk polynomials")
    try:
        frame, family, u, table = krawtchouk_checks(p_text, two_j)
    except (DualityLabError, ValueError, ZeroDivisionError) as e:
        st.error(f"Invalid family: {e}")
        return

    col1, col2 = st.columns([1, 2])
    with col1:
        st.write("Probabilities")
        st.dataframe(family, hide_index=True)
    with col2:
        st.write("U")
        st.dataframe(u)

    st.dataframe(frame, hide_index=True, use_container_width=True)
    charts.show(charts.residual_bars(frame))

    n = len(family) - 1
    labels = [str(state) for state in local_states(n, two_j)]
    charts.show(charts.duality_heatmap(table, f"K(xi, eta) for 2j={two_j}", labels, labels))


def render_charlier_view():
    st.subheader("Charlier polynomials")
    col1, col2, col3 = st.columns(3)
    with col1:
        lam_text = st.text_input("lambda", value="1")
    with col2:
        m_max = st.slider("Max degree", 1, 10, 6)
    with col3:
        z_max = st.slider("Max argument", 5, 40, 20)
    try:
        frame, table = charlier_checks(lam_text, m_max, z_max)
    except (DualityLabError, ValueError, ZeroDivisionError) as e:
        st.error(f"Invalid lambda: {e}")
        return
    st.dataframe(frame, hide_index=True, use_container_width=True)
    charts.show(charts.polynomial_lines(table, f"C_m(z, {lam_text})"))
