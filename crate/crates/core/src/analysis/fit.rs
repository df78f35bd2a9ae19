//! Weighted nonlinear least squares.

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{storage::Owned, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Best-fit parameters with their standard errors from the curvature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: Vec<f64>,
    pub errors: Vec<f64>,
    pub chi2: f64,
    pub dof: usize,
}

struct Problem<'a, F> {
    model: &'a F,
    x: &'a [f64],
    y: &'a [f64],
    sigma: &'a [f64],
    p: DVector<f64>,
}

impl<F: Fn(&[f64], f64) -> f64> Problem<'_, F> {
    fn residual_at(&self, p: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.x.len(),
            self.x.iter().zip(self.y).zip(self.sigma).map(|((&x, &y), &s)| ((self.model)(p, x) - y) / s),
        )
    }

    fn jacobian_at(&self, p: &[f64]) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.x.len(), p.len());
        let mut q = p.to_vec();
        for k in 0..p.len() {
            let h = 1e-6 * p[k].abs().max(1e-6);
            q[k] = p[k] + h;
            let up = self.residual_at(&q);
            q[k] = p[k] - h;
            let down = self.residual_at(&q);
            q[k] = p[k];
            j.set_column(k, &((up - down) / (2.0 * h)));
        }
        j
    }
}

impl<F: Fn(&[f64], f64) -> f64> LeastSquaresProblem<f64, Dyn, Dyn> for Problem<'_, F> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, x: &DVector<f64>) {
        self.p.copy_from(x);
    }

    fn params(&self) -> DVector<f64> {
        self.p.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        Some(self.residual_at(self.p.as_slice()))
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        Some(self.jacobian_at(self.p.as_slice()))
    }
}

/// Minimises `sum ((model(p, x_i) - y_i) / sigma_i)^2` from `init`.
pub fn weighted_fit<F>(model: &F, x: &[f64], y: &[f64], sigma: &[f64], init: &[f64]) -> Result<FitResult>
where
    F: Fn(&[f64], f64) -> f64,
{
    if x.len() != y.len() || x.len() != sigma.len() {
        return Err(Error::Fit("data arrays differ in length".into()));
    }
    if x.len() < init.len() {
        return Err(Error::Fit(format!("{} points cannot fix {} parameters", x.len(), init.len())));
    }
    if sigma.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::Fit("uncertainties must be positive".into()));
    }
    let problem = Problem { model, x, y, sigma, p: DVector::from_column_slice(init) };
    let (problem, report) = LevenbergMarquardt::new().minimize(problem);
    if !report.termination.was_successful() {
        return Err(Error::Fit(format!("{:?}", report.termination)));
    }
    let p = problem.p.as_slice().to_vec();
    let r = problem.residual_at(&p);
    let j = problem.jacobian_at(&p);
    let cov = (j.transpose() * &j)
        .try_inverse()
        .ok_or_else(|| Error::Fit("singular curvature matrix".into()))?;
    let errors = (0..p.len()).map(|k| cov[(k, k)].max(0.0).sqrt()).collect();
    Ok(FitResult { params: p, errors, chi2: r.norm_squared(), dof: x.len() - init.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_gaussian_parameters() {
        let truth = [2.0, 3.0];
        let model = |p: &[f64], x: f64| p[0] * (-(x / p[1]).powi(2)).exp();
        let x: Vec<f64> = (0..40).map(|i| i as f64 * 0.25).collect();
        let y: Vec<f64> = x.iter().map(|&x| model(&truth, x)).collect();
        let fit = weighted_fit(&model, &x, &y, &vec![0.01; x.len()], &[1.0, 1.5]).unwrap();
        assert!((fit.params[0] - 2.0).abs() < 1e-6 && (fit.params[1] - 3.0).abs() < 1e-6);
        assert!(fit.chi2 < 1e-8);
    }
}
