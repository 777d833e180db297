"""
Why a nonlinear map is needed at all
====================================

The benchmark generator puts class centroids on hypercube vertices and
then buries them in noise that has been pushed through a different
full-rank linear map for every class. The noise dwarfs the centroid
scale, so no single 2D linear view can separate the classes; what a
neighborhood method can still exploit is that each class carries its
own noise orientation.
"""

import numpy as np

from phenomap.gmm import fit_gmm, predict
from phenomap.pca import fit_pca, transform_pca
from phenomap.preprocess import apply_preprocessor, fit_preprocessor
from phenomap.stability import ari
from phenomap.synthetic import SyntheticSpec, generate_synthetic
from phenomap.umap_embed import UmapParams, fit_umap

spec = SyntheticSpec(sample_count=2000, feature_count=12,
                     informative_count=8, class_count=4,
                     class_separation=1.0, seed=42)
table, truth = generate_synthetic(spec)
print(f"{table.row_count} rows, {len(table.schema)} features, "
      f"{spec.class_count} latent classes")

# the noise per coordinate is ~sqrt(informative/3) wide, the centroids
# sit at +-1: a linear projection sees almost pure noise
rows = np.arange(table.row_count)
pre = fit_preprocessor(table, rows)
matrix = apply_preprocessor(pre, table, rows)

pca = fit_pca(matrix)
flat = transform_pca(pca, matrix)
pca_labels = predict(fit_gmm(flat, spec.class_count, seed=1), flat).labels
print(f"PCA + GMM ground-truth ARI:  {ari(pca_labels, truth):.3f}")

model = fit_umap(matrix, UmapParams(n_neighbors=15, min_dist=0.1,
                                    epochs=200, seed=1))
umap_labels = predict(fit_gmm(model.embedding, spec.class_count, seed=1),
                      model.embedding).labels
print(f"UMAP + GMM ground-truth ARI: {ari(umap_labels, truth):.3f}")
print("same features, same mixture model; only the 2D map changed")
