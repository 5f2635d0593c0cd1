#![allow(dead_code)]

use std::sync::Arc;

use rtgrowth::forms::AssembledForms;
use rtgrowth::grid::{BoxMesh, FeSpace};
use rtgrowth::steady::{Density, DensitySpec, EnergyConstant, PhysParams, SteadyProfile};

pub fn reference_params() -> PhysParams {
    PhysParams::new(1.0, 5.0 / 3.0, 0.1, 0.1).unwrap()
}

pub fn reference_profile() -> Arc<SteadyProfile> {
    let p = reference_params();
    Arc::new(
        SteadyProfile::build(
            Density::Linear {
                rho0: 1.0,
                slope: 1.0,
            },
            (0.0, 1.0),
            p,
            EnergyConstant::Explicit(-2.0),
        )
        .unwrap(),
    )
}

pub fn isothermal_profile() -> Arc<SteadyProfile> {
    let spec = DensitySpec::Isothermal { rho0: 2.0, e0: 3.0 };
    Arc::new(SteadyProfile::from_spec(&spec, (0.0, 1.0), reference_params(), None, None).unwrap())
}

pub fn forms_on(profile: Arc<SteadyProfile>, n: usize) -> AssembledForms {
    let mesh = Arc::new(BoxMesh::unit(2, n).unwrap());
    AssembledForms::assemble(Arc::new(FeSpace::velocity(mesh)), profile).unwrap()
}

pub fn reference_forms(n: usize) -> AssembledForms {
    forms_on(reference_profile(), n)
}
