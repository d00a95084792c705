use std::ffi::{CStr, CString};
use std::ptr;

use splitsys_ffi::*;

fn last_error() -> String {
    let p = splitsys_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn generate_solve_and_read_back() {
    unsafe {
        let mut inst = ptr::null_mut();
        assert_eq!(
            splitsys_instance_generate(4, 2, 3, SplitsysStructure::MixedL1, &mut inst),
            SplitsysStatus::Ok
        );
        assert_eq!(splitsys_instance_dimension(inst), 4);
        assert_eq!(splitsys_instance_components(inst), 2);

        let params = splitsys_params_new();
        let mut res = ptr::null_mut();
        assert_eq!(splitsys_solve(inst, params, ptr::null(), 0, &mut res), SplitsysStatus::Ok);
        assert_eq!(splitsys_result_status(res), SplitsysSolveStatus::Solved);
        assert!(splitsys_result_final_residual(res) <= 1e-6);
        assert_eq!(splitsys_result_fejer_violations(res), 0);

        let mut x = [0.0; 4];
        let mut star = [0.0; 4];
        assert_eq!(splitsys_result_x_final(res, x.as_mut_ptr(), 4), SplitsysStatus::Ok);
        assert_eq!(splitsys_instance_known_solution(inst, star.as_mut_ptr(), 4), SplitsysStatus::Ok);
        for (a, b) in x.iter().zip(&star) {
            assert!((a - b).abs() < 1e-4, "{x:?} vs {star:?}");
        }

        let mut r = f64::NAN;
        assert_eq!(splitsys_residual(inst, 0.5, star.as_ptr(), 4, &mut r), SplitsysStatus::Ok);
        assert!(r <= 1e-8);

        let mut csv = ptr::null_mut();
        assert_eq!(splitsys_result_trace_csv(res, &mut csv), SplitsysStatus::Ok);
        let text = CStr::from_ptr(csv).to_str().unwrap().to_owned();
        splitsys_string_free(csv);
        assert!(text.starts_with("k,residual,dist_to_star,beta,linesearch_total,time_ms"));
        assert_eq!(text.lines().count(), splitsys_result_iterations(res) + 2);

        splitsys_result_free(res);
        splitsys_params_free(params);
        splitsys_instance_free(inst);
    }
}

#[test]
fn json_round_trip_through_the_abi() {
    unsafe {
        let mut inst = ptr::null_mut();
        splitsys_instance_generate(3, 1, 9, SplitsysStructure::AffineVi, &mut inst);
        let mut json = ptr::null_mut();
        assert_eq!(splitsys_instance_to_json(inst, &mut json), SplitsysStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(splitsys_instance_from_json(json, false, &mut back), SplitsysStatus::Ok);
        assert_eq!(splitsys_instance_dimension(back), 3);
        splitsys_string_free(json);
        splitsys_instance_free(back);
        splitsys_instance_free(inst);
    }
}

#[test]
fn errors_are_reported_with_messages() {
    unsafe {
        let mut inst = ptr::null_mut();
        let bad = CString::new("{\"not\": \"an instance\"}").unwrap();
        assert_eq!(splitsys_instance_from_json(bad.as_ptr(), false, &mut inst), SplitsysStatus::Parse);
        assert!(inst.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(
            splitsys_instance_from_json(ptr::null(), false, &mut inst),
            SplitsysStatus::NullPointer
        );

        let params = splitsys_params_new();
        assert_eq!(splitsys_params_set_delta(params, 1.5), SplitsysStatus::InvalidArgument);
        assert!(last_error().contains("delta"), "{}", last_error());
        assert_eq!(splitsys_params_set_theta(params, 0.25), SplitsysStatus::Ok);
        assert_eq!(splitsys_params_set_beta_bounds(params, 1.0, 0.1), SplitsysStatus::InvalidArgument);

        splitsys_instance_generate(3, 1, 1, SplitsysStructure::AffineVi, &mut inst);
        let mut res = ptr::null_mut();
        let x0 = [0.0; 2];
        assert_eq!(
            splitsys_solve(inst, params, x0.as_ptr(), 2, &mut res),
            SplitsysStatus::DimensionMismatch
        );

        assert_eq!(splitsys_solve(inst, params, ptr::null(), 0, &mut res), SplitsysStatus::Ok);
        let mut small = [0.0; 2];
        assert_eq!(
            splitsys_result_x_final(res, small.as_mut_ptr(), 2),
            SplitsysStatus::BufferTooSmall
        );
        splitsys_result_free(res);
        splitsys_params_free(params);
        splitsys_instance_free(inst);
    }
}

#[test]
fn iteration_cap_is_reported_in_the_result() {
    unsafe {
        let mut inst = ptr::null_mut();
        splitsys_instance_generate(10, 2, 4, SplitsysStructure::AffineVi, &mut inst);
        let params = splitsys_params_new();
        assert_eq!(splitsys_params_set_limits(params, 1, 60), SplitsysStatus::Ok);
        let mut res = ptr::null_mut();
        assert_eq!(splitsys_solve(inst, params, ptr::null(), 0, &mut res), SplitsysStatus::Ok);
        assert_eq!(splitsys_result_status(res), SplitsysSolveStatus::MaxIterations);
        assert_eq!(splitsys_result_iterations(res), 1);
        splitsys_result_free(res);
        splitsys_params_free(params);
        splitsys_instance_free(inst);
    }
}

#[test]
fn null_handles_are_tolerated() {
    unsafe {
        splitsys_instance_free(ptr::null_mut());
        splitsys_params_free(ptr::null_mut());
        splitsys_result_free(ptr::null_mut());
        splitsys_string_free(ptr::null_mut());
        assert_eq!(splitsys_instance_dimension(ptr::null()), 0);
        assert!(splitsys_result_final_residual(ptr::null()).is_nan());
        let mut out = ptr::null_mut();
        assert_eq!(
            splitsys_solve(ptr::null(), ptr::null(), ptr::null(), 0, &mut out),
            SplitsysStatus::NullPointer
        );
    }
}
