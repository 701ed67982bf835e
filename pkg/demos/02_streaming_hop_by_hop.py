"""Real-time style enhancement: feed 16 ms hops, get 16 ms hops back.

The streaming engine carries all model state between calls, so output
is produced incrementally with one hop (256 samples = 16 ms) of
latency, yet matches the offline batch result to float precision.
"""
import numpy as np

import winnow
from winnow.data import synthesize_pair
from winnow.frontend import HOP

model = winnow.build_model(winnow.tiny_config(), seed=0)
noisy, _ = synthesize_pair(np.random.default_rng(5), duration_s=1.0)

# pad to whole hops, as a soundcard callback naturally would
hops = -(-noisy.size // HOP)
padded = np.zeros(hops * HOP, dtype=np.float32)
padded[: noisy.size] = noisy

engine = winnow.StreamingEnhancer(model)
chunks = []
for j in range(hops):
    # each push accepts the next 256 input samples and returns the 256
    # enhanced samples of the PREVIOUS hop; the first return is the
    # engine's warm-up output from before any audio was known
    chunks.append(engine.push(padded[j * HOP : (j + 1) * HOP]))
chunks.append(engine.flush())  # drain the final hop

streamed = np.concatenate(chunks[1:])[: noisy.size]
offline = winnow.enhance_offline(noisy, model)
print(f"pushed {hops} hops of {HOP} samples ({HOP / 16000 * 1000:.0f} ms each)")
print(f"max |stream - offline| = {np.max(np.abs(streamed - offline)):.2e}  (tolerance 1e-4)")

# the engine can be reset and reused for a new stream
engine.reset()
print("engine reset; state cleared for the next stream")
