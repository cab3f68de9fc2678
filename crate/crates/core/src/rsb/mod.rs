//! Replica statistics: overlaps, histograms, clustering, equilibrium fits
//! and ultrametricity.

pub mod cluster;
pub mod overlap;
pub mod thermal;
pub mod ultrametric;

pub use cluster::{hierarchical_cluster, Dendrogram, Merge};
pub use overlap::{
    bin_centers, bin_index, binder_ratio, bootstrap_histogram, magnetization_distribution, moments, overlap,
    overlap_histogram, overlap_matrix, parisi_distribution, Histogram, OverlapMatrix, ReplicaSet,
};
pub use thermal::{fit_temperature, tc_bar, thermal_overlap, ThermalFit, ThermalModel};
pub use ultrametric::{triplet_k, ultrametric_stats, UltrametricStats};
