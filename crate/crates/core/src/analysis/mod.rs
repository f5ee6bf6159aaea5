//! Defect and disagreement analyses (placeholder).
