"""Smoke test for the geek extension module."""

import json

import geek

data, labels = geek.synthetic("gaussian-mixture", 3000, 8, 5, 10.0, seed=1)
assert len(data) == 3000 and data.kind == "dense"

cfg = geek.Config(json.dumps({"m": 8, "t": 40, "silk_K": 2, "silk_L": 10, "delta": 5}))
buckets = geek.transform(data, cfg)
assert len(buckets) == 8 * 40
seeds = geek.seed(buckets, len(data), cfg)
staged = geek.assign(data, seeds, cfg)

whole = geek.run(data, cfg)
assert whole.assignment == staged.assignment, "single worker run differs from the staged one"

cfg.g = 2
two = geek.run(data, cfg)
record = json.loads(two.metrics_json())
assert record["k_star"] == two.k_star >= 1
assert len(two.assignment) == 3000 and two.max_radius >= two.mean_radius

sparse = geek.Dataset.sparse([[1, 5, 9], [1, 5, 10], [200, 300]], universe=1000)
assert sparse.kind == "sparse"

try:
    geek.Config('{"colour": 1}')
except ValueError:
    pass
else:
    raise AssertionError("unknown config keys must be rejected")

print(f"ok: k* = {whole.k_star} (g=1), {two.k_star} (g=2), mean radius {two.mean_radius:.3f}")
