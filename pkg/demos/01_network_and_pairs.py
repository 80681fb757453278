"""Build a family network and pick alter-ego pairs whose neighbourhoods never touch.

Every node belongs to a household of five (all tied to each other) and is
tied to people outside its household at random. From this network we pick
tied pairs such that the pair plus all contacts of either member (its zone)
shares no node and no tie with any other selected zone.
"""

import numpy as np

from vaxcontagion import (
    extract_independent_pairs,
    generate_family_network,
    pairs_are_distance_separated,
    pairs_are_independent,
    scaled_out_tie_prob,
)

rng = np.random.default_rng(1)

for nodes in (8000, 10000, 12000):
    p = scaled_out_tie_prob(nodes)
    net = generate_family_network(nodes // 5, 5, p, rng)
    deg = net.degree()
    out = extract_independent_pairs(net, rng)
    sizes = [len(zone.members) for _, zone in out]
    print(f"{nodes} nodes: {net.tie_count} ties, mean degree {deg.mean():.2f} "
          f"(4 inside the household), out-of-group tie prob {p:.3g}")
    print(f"  {len(out)} pairs, zone sizes {min(sizes)}-{max(sizes)} (mean {np.mean(sizes):.1f})")
    print(f"  zones disjoint and non-adjacent: {pairs_are_independent(net, out)}; "
          f"pairs at distance >= 4: {pairs_are_distance_separated(net, out)}")

pair, zone = out[0]
print(f"\nfirst pair: alter {pair.alter}, ego {pair.ego}, zone {sorted(zone.members)}")
