"""Three ways to spread a dataset over shards, and what each costs a query."""

import numpy as np

from trajtrie import build_index, generate_clustered, linear_scan, query

data = generate_clustered(clusters=20, per_cluster=50, seed=4)
rng = np.random.default_rng(0)
queries = [data[i].points + rng.normal(0, 0.3, (1, 2)) for i in rng.choice(len(data), 5)]

# %% same answers, different work
for strategy in ("hetero", "homo", "random"):
    index = build_index(data, "frechet", 1.0, n_partitions=8, strategy=strategy)
    exact = []
    for q in queries:
        res = query(index, q, 10)
        assert res.hits == linear_scan(data, q, 10, "frechet").hits
        exact.append([s.exact for s in res.stats])
    per_shard = np.mean(exact, axis=0)
    print(f"{strategy:7s} sizes {index.assignment.sizes}  mean exact per shard {per_shard.round(1).tolist()}")
