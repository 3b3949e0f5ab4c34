"""CSV/JSON codecs.

Numbers are written with 9 fixed decimals whenever that string reads back
to the same float; otherwise the shortest round-trip repr is used, so
``parse(emit(x)) == x`` holds for every value.  Files are written to a
``.partial`` sibling and renamed into place when complete.
"""

from __future__ import annotations

import csv
import json
import os
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from bvpp_sim.bems import TariffSet
from bvpp_sim.errors import GridMismatch
from bvpp_sim.grid import LoadProfile, NetLoadProfile, TimeGrid

PARTIAL = ".partial"


def fmt(x) -> str:
    x = float(x)
    if x == 0:
        return "0.000000000"
    s = f"{x:.9f}"
    return s if float(s) == x else repr(x)


@contextmanager
def atomic_open(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + PARTIAL)
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        yield fh
    os.replace(tmp, path)


def write_csv(path, header, rows):
    with atomic_open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return Path(path)


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty CSV, header row required")
    return rows[0], rows[1:]


def write_json(path, data):
    with atomic_open(path) as fh:
        fh.write(dumps(data))
    return Path(path)


def dumps(data) -> str:
    return json.dumps(_plain(data), indent=2, sort_keys=True) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def _column_array(header, rows, name, path):
    try:
        i = header.index(name)
    except ValueError:
        raise ValueError(f"{path}: missing column {name!r}") from None
    return np.array([float(r[i]) for r in rows])


# profiles: interval, <appliance ids...>, solar


def write_profiles(path, profiles: dict, solar: LoadProfile):
    ids = list(profiles)
    cols = [profiles[a].values for a in ids] + [solar.values]
    rows = ([t] + [float(c[t]) for c in cols] for t in range(len(solar.values)))
    return write_csv(path, ["interval", *ids, "solar"], rows)


def read_profiles(path, grid: TimeGrid):
    header, rows = read_csv(path)
    if header[0] != "interval" or header[-1] != "solar":
        raise ValueError(f"{path}: expected columns interval, <appliances...>, solar")
    if len(rows) != grid.length:
        raise GridMismatch(f"{path}: {len(rows)} rows, grid has {grid.length} intervals")
    data = np.array([[float(v) for v in r[1:]] for r in rows]).reshape(len(rows), len(header) - 1)
    profiles = {a: LoadProfile(data[:, i], grid) for i, a in enumerate(header[1:-1])}
    return profiles, LoadProfile(data[:, -1], grid)


# tariffs: interval, tou, fit, market_price


def write_tariffs(path, tariffs: TariffSet):
    rows = ([t, float(tariffs.tou[t]), float(tariffs.fit[t]), float(tariffs.market_price[t])] for t in range(len(tariffs)))
    return write_csv(path, ["interval", "tou", "fit", "market_price"], rows)


def read_tariffs(path) -> TariffSet:
    header, rows = read_csv(path)
    return TariffSet(*(_column_array(header, rows, c, path) for c in ("tou", "fit", "market_price")))


def write_net_load(path, net: NetLoadProfile):
    return write_csv(path, ["interval", "net_kw"], ([t, float(v)] for t, v in enumerate(net.values)))


def read_net_load(path, grid: TimeGrid) -> NetLoadProfile:
    header, rows = read_csv(path)
    return NetLoadProfile(_column_array(header, rows, "net_kw", path), grid)


def starts_from_profiles(profiles: dict, grid: TimeGrid) -> list[dict[str, int]]:
    """Recover each day's run start as the first non-zero interval."""
    days = [dict() for _ in range(grid.num_days)]
    for app_id, p in profiles.items():
        for d, row in enumerate(p.by_day()):
            on = np.flatnonzero(row > 0)
            if on.size:
                days[d][app_id] = int(on[0])
    return days

