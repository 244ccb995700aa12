import logging

import streamlit as st

from components import duality_view, krawtchouk_view, lie_view, simulation_view
from utils import configure_logging

configure_logging(logging.WARNING)

# Page configuration
st.set_page_config(
    page_title="Duality Lab",
    page_icon="🔁",
    layout="wide",
    initial_sidebar_state="expanded"
)

GRAPH_PRESETS = ['edge', 'path-3', 'triangle', 'cycle-4', 'complete-4']


def sidebar_parameters():
    st.sidebar.subheader("Model")
    graph_name = st.sidebar.selectbox("Graph", GRAPH_PRESETS)
    p_text = st.sidebar.text_input("p (comma separated)", value="1/3,1/3,1/3",
                                   help="Probability vector; its length fixes n + 1")
    two_j = st.sidebar.slider("2j", 1, 4, 1)
    return graph_name, p_text, two_j


def main():
    st.sidebar.title("Navigation")
    page = st.sidebar.radio("Go to", ["Krawtchouk", "Charlier", "Self-duality", "Lie algebra", "Monte Carlo"])
    graph_name, p_text, two_j = sidebar_parameters()

    if page == "Krawtchouk":
        krawtchouk_view.render_krawtchouk_view(p_text, two_j)
    elif page == "Charlier":
        krawtchouk_view.render_charlier_view()
    elif page == "Self-duality":
        duality_view.render_duality_view(graph_name, p_text, two_j)
    elif page == "Lie algebra":
        lie_view.render_lie_view(graph_name, p_text, two_j)
    else:  # Monte Carlo
        simulation_view.render_simulation_view(graph_name, p_text, two_j)


if __name__ == "__main__":
    main()
