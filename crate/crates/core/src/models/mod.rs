//! Learners used by the screening loop: the class-weighted linear SVM that
//! ranks documents and the 1-D logistic curve that maps its decision values
//! to probabilities during recall estimation.

mod logistic;
mod svm;

pub use logistic::{fit_logistic_1d, fit_logistic_1d_l2, sigmoid, LogisticCurve};
pub use svm::{
    aggressive_undersample, hinge_objective, hinge_subgradient, select_most_negative, train_svm, ClassWeights, Example,
    ModelSnapshot, SvmConfig, TrainingCounts,
};
