//! Operation bookkeeping for the homomorphic pipelines.

/// Taylor approximation orders and evaluation strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ApproxConfig {
    /// exp series order N1.
    pub exp_order: usize,
    /// cos series order N2.
    pub cos_order: usize,
    pub strategy: EvalStrategy,
    /// Refresh is triggered once fewer than `required + reserve` levels
    /// remain before a stage.
    pub refresh_reserve_levels: usize,
}

impl ApproxConfig {
    pub fn new(exp_order: usize, cos_order: usize) -> Self {
        Self {
            exp_order,
            cos_order,
            strategy: EvalStrategy::PowerBasis,
            refresh_reserve_levels: 1,
        }
    }

    pub fn validate(&self) -> Result<(), crate::error::PipelineError> {
        if self.exp_order < 1 || self.cos_order < 1 || self.refresh_reserve_levels < 1 {
            return Err(crate::error::PipelineError::Manifest(format!(
                "approximation orders and reserve must be >= 1 (N1={}, N2={}, reserve={})",
                self.exp_order, self.cos_order, self.refresh_reserve_levels
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalStrategy {
    /// Powers by repeated products, then a plaintext-coefficient
    /// combination: ceil(log2(order)) + 1 levels per series call.
    PowerBasis,
    /// Classic Horner: `order` levels per series call.
    Horner,
}

/// Monotone counters over one homomorphic computation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounter {
    /// Ciphertext additions (ct+ct and ct+plain).
    pub additions: usize,
    /// Ciphertext products (ct*ct and ct*plain, rescaling or not).
    pub multiplications: usize,
    /// Collaborative refreshes triggered.
    pub refreshes: usize,
    /// Products that consumed a level via rescale (audit).
    pub rescaling_products: usize,
    /// Products that kept their scale (audit).
    pub kept_scale_products: usize,
    /// Standalone rescales and level drops of inputs (audit).
    pub standalone_rescales: usize,
}

impl OpCounter {
    pub fn add(&mut self, n: usize) {
        self.additions += n;
    }

    pub fn mult_rescaling(&mut self) {
        self.multiplications += 1;
        self.rescaling_products += 1;
    }

    pub fn mult_kept(&mut self) {
        self.multiplications += 1;
        self.kept_scale_products += 1;
    }

    pub fn rescale(&mut self) {
        self.standalone_rescales += 1;
    }

    pub fn refresh(&mut self) {
        self.refreshes += 1;
    }
}
