import numpy as np
import plotly.graph_objects as go
import streamlit as st

from models import Trajectory


def _layout(fig, title, height=450, **axes):
    fig.update_layout(
        title=title,
        template='plotly_dark',
        height=height,
        margin=dict(l=0, r=0, t=30, b=0),
        **axes
    )
    return fig


def duality_heatmap(matrix, title, labels_x=None, labels_y=None):
    """Signed heatmap of a duality matrix, symmetric colour scale around zero."""
    matrix = np.asarray(matrix, dtype=float)
    bound = float(np.max(np.abs(matrix))) if matrix.size else 1.0
    fig = go.Figure(data=[go.Heatmap(z=matrix, x=labels_x, y=labels_y, colorscale='RdBu',
                                     zmin=-bound, zmax=bound)])
    return _layout(fig, title, yaxis=dict(autorange='reversed'))


def residual_bars(frame, title='Residuals'):
    """Log-scale residual per check with its tolerance as a marker."""
    floor = 1e-18
    fig = go.Figure()
    fig.add_trace(go.Bar(x=frame['check'], y=frame['residual'].clip(lower=floor), name='residual',
                         marker_color=['#2ca02c' if ok else '#d62728' for ok in frame['passed']]))
    fig.add_trace(go.Scatter(x=frame['check'], y=frame['tolerance'], mode='markers', name='tolerance',
                             marker=dict(symbol='line-ew-open', size=18, color='white')))
    return _layout(fig, title, height=350, yaxis=dict(type='log', title='max-entry residual'))


def trajectory_plot(trajectory: Trajectory, title='Sample path'):
    times = [0.0] + list(trajectory.times) + [trajectory.horizon]
    ranks = trajectory.ranks + [trajectory.final]
    fig = go.Figure(data=[go.Scatter(x=times, y=ranks, mode='lines', line_shape='hv')])
    return _layout(fig, title, height=300, xaxis=dict(title='time'), yaxis=dict(title='state rank'))


def polynomial_lines(table, title, x_label='z', name='m'):
    """One line per row of ``table`` (degree) against its column index."""
    fig = go.Figure()
    for m, row in enumerate(np.asarray(table)):
        fig.add_trace(go.Scatter(x=list(range(len(row))), y=row, mode='lines+markers', name=f'{name}={m}'))
    return _layout(fig, title, xaxis=dict(title=x_label))


def distribution_bars(empirical, exact, title='Law at time T'):
    states = list(range(len(exact)))
    fig = go.Figure()
    fig.add_trace(go.Bar(x=states, y=empirical, name='simulated'))
    fig.add_trace(go.Scatter(x=states, y=exact, mode='markers', name='exp(TL) row'))
    return _layout(fig, title, height=350, xaxis=dict(title='state rank'))


def show(fig):
    st.plotly_chart(fig, use_container_width=True)
