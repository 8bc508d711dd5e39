# File formats end to end: model text file, GHNE binary bank, PGM input,
# feature images, and the stats CSV. Everything lands in demos/out/.

import os

import numpy as np

from ghne import (
    LayerSpec,
    Model,
    apply,
    bank_stats,
    collapse,
    load_epitome,
    load_model,
    read_image,
    save_epitome,
    save_model,
)
from ghne.model_io import write_member_images, write_pgm, write_stats_csv

out = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(out, exist_ok=True)

rng = np.random.default_rng(0)
model = Model(
    [
        LayerSpec("edges", rng.uniform(0, 1, (2, 1, 3, 3)), 1),
        LayerSpec("pool", rng.uniform(0, 1, (2, 2, 3, 3)), 2),
    ]
)

# models are plain text; weights inline as decimals that round-trip
model_path = os.path.join(out, "demo.ghnm")
save_model(model, model_path)
print("model file starts with:")
with open(model_path) as f:
    for _ in range(6):
        print("   ", f.readline().rstrip())
reloaded = load_model(model_path)
print("weights identical after reload:",
      np.array_equal(reloaded.layers[0].weights, model.layers[0].weights))

# the collapsed bank goes to the GHNE binary format, bit-exact
deep = collapse(reloaded)
bank_path = os.path.join(out, "demo.ghne")
save_epitome(deep, bank_path)
loaded = load_epitome(bank_path)
print("GHNE round-trip bit-exact:", loaded.g.tobytes() == deep.bank.g.tobytes())

# an input image; pixels read back as p/255 in [0,1]
pixels = rng.integers(0, 256, size=(12, 12)).astype(np.uint8)
image_path = os.path.join(out, "input.pgm")
write_pgm(image_path, pixels)
input_bank = read_image(image_path)
print("input bank:", input_bank, "normalized:", input_bank.is_normalized)

# one-step features, rendered to min-max scaled grayscale images
features = apply(input_bank, loaded, crop="same")
written = write_member_images(features, os.path.join(out, "features"), prefix="feature")
print("wrote", len(written), "feature images plus scaling.txt")

# distribution stats: per-member histograms plus the pooled aggregate
report = bank_stats(deep.bank, bins=8)
write_stats_csv(report, os.path.join(out, "stats.csv"))
print("aggregate fuzziness:", round(report.aggregate.fuzziness, 6))
with open(os.path.join(out, "stats.csv")) as f:
    print("stats.csv starts with:")
    for _ in range(3):
        print("   ", f.readline().rstrip())
