use fqs_ffi::*;
use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

fn last_error() -> Option<String> {
    let p = fqs_last_error_message();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

struct Rig {
    obs: *mut FqsObservable,
    template: *mut FqsTemplate,
    params: *mut FqsParams,
}

impl Rig {
    fn new(n: usize, layers: usize, seed: u64) -> Self {
        let mut obs = ptr::null_mut();
        let mut template = ptr::null_mut();
        let mut params = ptr::null_mut();
        let mut slots = 0;
        unsafe {
            assert_eq!(fqs_observable_ising(n, 1.0, 0.5f64.sqrt(), true, &mut obs), FqsStatus::Ok);
            assert_eq!(fqs_template_new(FqsFamily::Alternating as u32, n, layers, &mut template), FqsStatus::Ok);
            assert_eq!(fqs_template_num_slots(template, &mut slots), FqsStatus::Ok);
            assert_eq!(fqs_params_random(slots, seed, &mut params), FqsStatus::Ok);
        }
        Rig { obs, template, params }
    }

    fn energy(&self) -> f64 {
        let mut e = f64::NAN;
        assert_eq!(unsafe { fqs_energy(self.template, self.params, self.obs, &mut e) }, FqsStatus::Ok);
        e
    }
}

impl Drop for Rig {
    fn drop(&mut self) {
        unsafe {
            fqs_params_free(self.params);
            fqs_template_free(self.template);
            fqs_observable_free(self.obs);
        }
    }
}

#[test]
fn slot_matrix_quadratic_form_matches_energy() {
    let rig = Rig::new(4, 2, 3);
    let mut s = [0.0; 16];
    let mut q = [0.0; 4];
    unsafe {
        assert_eq!(fqs_slot_matrix(rig.template, rig.params, rig.obs, 5, s.as_mut_ptr()), FqsStatus::Ok);
        assert_eq!(fqs_params_get(rig.params, 5, q.as_mut_ptr()), FqsStatus::Ok);
    }
    let form: f64 = (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).map(|(i, j)| q[i] * s[4 * i + j] * q[j]).sum();
    assert!((form - rig.energy()).abs() < 1e-10);
}

#[test]
fn slot_updates_lower_energy_and_report_it() {
    let rig = Rig::new(4, 2, 5);
    let axis = [0.0, 0.0, 1.0];
    for (slot, method) in [FqsMethod::Fqs, FqsMethod::Fraxis, FqsMethod::Rotosolve, FqsMethod::Rotoselect]
        .into_iter()
        .enumerate()
    {
        let before = rig.energy();
        let mut reported = f64::NAN;
        let status =
            unsafe { fqs_update_slot(rig.template, rig.params, rig.obs, method as u32, slot, axis.as_ptr(), &mut reported) };
        assert_eq!(status, FqsStatus::Ok, "{:?}", last_error());
        // only FQS searches a superset of the current Haar gate
        if method == FqsMethod::Fqs {
            assert!(reported <= before + 1e-12);
        }
        assert!((reported - rig.energy()).abs() < 1e-9);
    }
}

#[test]
fn optimize_reaches_ground_energy_with_expected_budget() {
    let rig = Rig::new(3, 3, 0);
    let mut ground = 0.0;
    let (mut params, mut e, mut evals) = (ptr::null_mut(), 0.0, 0u64);
    let mut slots = 0;
    unsafe {
        assert_eq!(fqs_observable_ground_energy(rig.obs, &mut ground), FqsStatus::Ok);
        assert_eq!(fqs_template_num_slots(rig.template, &mut slots), FqsStatus::Ok);
        let status = fqs_optimize(rig.template, rig.obs, FqsMethod::Fqs as u32, 40, 11, &mut params, &mut e, &mut evals);
        assert_eq!(status, FqsStatus::Ok);
        let mut len = 0;
        assert_eq!(fqs_params_len(params, &mut len), FqsStatus::Ok);
        assert_eq!(len, slots);
        fqs_params_free(params);
    }
    assert_eq!(evals, 10 * 40 * slots as u64);
    assert!(e - ground < 1e-3, "{e} vs {ground}");
}

#[test]
fn params_round_trip() {
    let rig = Rig::new(2, 1, 1);
    let q = [0.5, 0.5, -0.5, 0.5];
    let mut back = [0.0; 4];
    unsafe {
        assert_eq!(fqs_params_set(rig.params, 0, q.as_ptr()), FqsStatus::Ok);
        assert_eq!(fqs_params_get(rig.params, 0, back.as_mut_ptr()), FqsStatus::Ok);
    }
    for (a, b) in q.iter().zip(back) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn observable_terms_accumulate() {
    let mut obs = ptr::null_mut();
    let mut e = 0.0;
    unsafe {
        assert_eq!(fqs_observable_new(2, &mut obs), FqsStatus::Ok);
        for (c, w) in [(1.0, "ZI"), (0.5, "IZ"), (0.25, "ZI")] {
            let w = CString::new(w).unwrap();
            assert_eq!(fqs_observable_add_term(obs, c, w.as_ptr()), FqsStatus::Ok);
        }
        assert_eq!(fqs_observable_ground_energy(obs, &mut e), FqsStatus::Ok);
        fqs_observable_free(obs);
    }
    assert!((e + 1.75).abs() < 1e-12);
}

#[test]
fn errors_map_to_status_codes_with_messages() {
    let rig = Rig::new(2, 1, 2);
    let mut out = ptr::null_mut();
    let mut e = 0.0;
    unsafe {
        assert_eq!(fqs_template_new(9, 2, 1, &mut out), FqsStatus::InvalidArgument);
        assert!(last_error().unwrap().contains("family"));
        assert_eq!(fqs_energy(ptr::null(), rig.params, rig.obs, &mut e), FqsStatus::NullPointer);
        assert!(last_error().unwrap().contains("template"));
        let bad = CString::new("ZQ").unwrap();
        assert_eq!(fqs_observable_add_term(rig.obs, 1.0, bad.as_ptr()), FqsStatus::InvalidArgument);
        let short = CString::new("Z").unwrap();
        assert_eq!(fqs_observable_add_term(rig.obs, 1.0, short.as_ptr()), FqsStatus::SizeMismatch);
        assert_eq!(
            fqs_update_slot(rig.template, rig.params, rig.obs, FqsMethod::Rotosolve as u32, 0, ptr::null(), &mut e),
            FqsStatus::NullPointer
        );
        assert_eq!(
            fqs_update_slot(rig.template, rig.params, rig.obs, FqsMethod::Fqs as u32, 999, ptr::null(), &mut e),
            FqsStatus::InvalidArgument
        );
        let mut big = ptr::null_mut();
        assert_eq!(fqs_observable_ising(1, 1.0, 1.0, true, &mut big), FqsStatus::InvalidArgument);
        // success clears the message
        assert_eq!(fqs_energy(rig.template, rig.params, rig.obs, &mut e), FqsStatus::Ok);
        assert!(last_error().is_none());
        fqs_observable_free(ptr::null_mut());
    }
}

#[test]
fn version_is_nul_terminated() {
    let v = unsafe { CStr::from_ptr(fqs_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/fqs.h");
    let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header]).output() else {
        eprintln!("no C compiler available; skipping");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
