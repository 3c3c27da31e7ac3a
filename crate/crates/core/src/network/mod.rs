//! Undirected networks: construction, latent-variable generators, the
//! normalized Laplacian, spectral embedding and alignment utilities.

mod eigen;
mod embed;
mod generate;
mod graph;
mod laplacian;
mod procrustes;
mod select;

pub use eigen::{apply_sign_convention, top_eigenpairs, EigenConfig, EigenPairs, SymmetricOperator};
pub use embed::{spectral_embed, spectral_embed_with, Embedding};
pub use generate::{
    assortative_block_matrix, draw_dcmmsbm, draw_dcsbm, draw_rdpg, sample_graph, Connection, Generated,
    IsolatedPolicy, LatentGraphSpec,
};
pub use graph::Graph;
pub use laplacian::{normalized_laplacian, Laplacian};
pub use procrustes::{procrustes_align, Alignment};
pub use select::{argmin_first, low_rank, select_k, CvConfig, KSelection};
