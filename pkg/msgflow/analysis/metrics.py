"""
Tabular metrics over an analyzed trace.
"""

from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from .ir import IrDatabase
from .links import LinkSet
from .timeline import build_timeline, utilization

STAT_COLUMNS = ['count', 'min', 'mean', 'p50', 'p99', 'max']


def _describe(df: pd.DataFrame, by: List[str], value: str) -> pd.DataFrame:
    """count/min/mean/p50/p99/max of ``value`` per group, in nanoseconds."""
    if df.empty:
        return pd.DataFrame(columns=by + STAT_COLUMNS)

    grouped = df.groupby(by, sort=True)[value]
    table = grouped.agg(
        count='count',
        min='min',
        mean='mean',
        p50=lambda s: float(np.percentile(s, 50)),
        p99=lambda s: float(np.percentile(s, 99)),
        max='max',
    ).reset_index()
    table['mean'] = table['mean'].round(1)
    return table


class MetricsEngine:
    """Builds metric tables from a database and its links."""

    @staticmethod
    def transport_latency_table(links: LinkSet) -> pd.DataFrame:
        """Transport latency statistics per topic."""
        rows = [
            {'topic': t.topic, 'latency_ns': d.latency}
            for t in links.transport for d in t.destinations
        ]
        return _describe(pd.DataFrame(rows, columns=['topic', 'latency_ns']), ['topic'], 'latency_ns')

    @staticmethod
    def callback_duration_table(db: IrDatabase) -> pd.DataFrame:
        """Callback duration statistics per owner (node plus topic or timer)."""
        rows = [
            {
                'node': db.node_name_of(c.owner),
                'owner': db.describe_object(c.owner),
                'kind': c.owner_kind,
                'duration_ns': c.duration,
            }
            for c in db.callback_instances
        ]
        df = pd.DataFrame(rows, columns=['node', 'owner', 'kind', 'duration_ns'])
        return _describe(df, ['node', 'owner', 'kind'], 'duration_ns')

    @staticmethod
    def utilization_table(db: IrDatabase, window: Optional[Tuple[int, int]] = None) -> pd.DataFrame:
        """Executor utilization per thread over the trace window."""
        window = window or db.time_span()
        columns = ['host', 'pid', 'tid', 'waiting', 'overhead', 'executing']
        if window[1] <= window[0]:
            return pd.DataFrame(columns=columns)
        lanes = build_timeline(db, window)
        rows = [
            {
                'host': u.host, 'pid': u.pid, 'tid': u.tid,
                'waiting': round(u.fraction_waiting, 6),
                'overhead': round(u.fraction_overhead, 6),
                'executing': round(u.fraction_executing, 6),
            }
            for u in utilization(lanes, window)
        ]
        return pd.DataFrame(rows, columns=columns)

    @staticmethod
    def diagnostic_counts(db: IrDatabase, links: Optional[LinkSet] = None) -> Dict[str, int]:
        """Number of diagnostics per code."""
        diagnostics = list(db.diagnostics) + (list(links.diagnostics) if links else [])
        counts: Dict[str, int] = {}
        for d in diagnostics:
            counts[d.code.value] = counts.get(d.code.value, 0) + 1
        return dict(sorted(counts.items()))


def format_table(df: pd.DataFrame, fmt: str = 'text') -> str:
    """Render a table as aligned text, csv or json."""
    if fmt == 'csv':
        return df.to_csv(index=False)
    if fmt == 'json':
        return df.to_json(orient='records', indent=2) + '\n'
    if df.empty:
        return '(no rows)\n'
    return df.to_string(index=False) + '\n'
