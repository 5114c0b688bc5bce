use std::ffi::CStr;
use std::ptr;

use aah_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 256];
    unsafe {
        aah_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn reference_chain(phi: f64) -> *mut AahSystem {
    let mut sys = ptr::null_mut();
    let st = unsafe { aah_system_new(99, 2.0, 1.0 / 3.0, phi, false, 0.1, 1.0, 10.0, &mut sys) };
    assert_eq!(st, AahStatus::Ok);
    assert!(!sys.is_null());
    sys
}

#[test]
fn system_round_trip() {
    let sys = reference_chain(-std::f64::consts::PI);
    unsafe {
        assert_eq!(aah_system_len(sys), 99);
        let mut e = vec![0.0; 99];
        assert_eq!(aah_system_energies(sys, e.as_mut_ptr(), e.len()), AahStatus::Ok);
        assert!(e.windows(2).all(|w| w[0] <= w[1]));
        let mut short = vec![0.0; 10];
        assert_eq!(aah_system_energies(sys, short.as_mut_ptr(), short.len()), AahStatus::BufferTooSmall);
        assert!(last_error().contains("need 99"));
        let mut sigma = 0.0;
        assert_eq!(aah_system_self_energy(sys, -2.0, &mut sigma), AahStatus::Ok);
        assert!(sigma < 0.0);
        assert_eq!(aah_system_self_energy(sys, 0.0, &mut sigma), AahStatus::InvalidArgument);
        aah_system_free(sys);
    }
}

#[test]
fn invalid_parameters_are_reported() {
    let mut sys = ptr::null_mut();
    let st = unsafe { aah_system_new(99, 2.0, 1.0 / 3.0, 0.0, false, -0.1, 1.0, 10.0, &mut sys) };
    assert_eq!(st, AahStatus::InvalidArgument);
    assert!(sys.is_null());
    assert!(last_error().contains("eta"));
    let st = unsafe { aah_system_new(1, 2.0, 1.0 / 3.0, 0.0, false, 0.1, 1.0, 10.0, &mut sys) };
    assert_eq!(st, AahStatus::InvalidArgument);
    let st = unsafe { aah_system_new(9, 2.0, 1.0 / 3.0, 0.0, false, 0.1, 1.0, 10.0, ptr::null_mut()) };
    assert_eq!(st, AahStatus::NullPointer);
}

#[test]
fn null_handles_are_harmless() {
    unsafe {
        assert_eq!(aah_system_len(ptr::null()), 0);
        assert_eq!(aah_bound_states_count(ptr::null()), 0);
        assert_eq!(aah_trajectory_len(ptr::null()), 0);
        aah_system_free(ptr::null_mut());
        aah_bound_states_free(ptr::null_mut());
        aah_trajectory_free(ptr::null_mut());
        let mut out = ptr::null_mut();
        assert_eq!(aah_bound_states_find(ptr::null(), false, &mut out), AahStatus::NullPointer);
        assert_eq!(aah_last_error_message(ptr::null_mut(), 0), "system is null".len());
    }
}

#[test]
fn bound_states_through_the_c_interface() {
    let sys = reference_chain(-std::f64::consts::PI);
    unsafe {
        let mut bs = ptr::null_mut();
        assert_eq!(aah_bound_states_find(sys, false, &mut bs), AahStatus::Ok);
        assert_eq!(aah_bound_states_count(bs), 3);
        let mut info = std::mem::zeroed::<AahBoundInfo>();
        assert_eq!(aah_bound_states_get(bs, 0, &mut info), AahStatus::Ok);
        assert_eq!(info.kind, AahBoundKind::DbsGround);
        assert!((info.energy + 23.1777).abs() < 1e-3);
        assert_eq!(aah_bound_states_get(bs, 3, &mut info), AahStatus::OutOfRange);
        let mut amps = vec![0.0; 99];
        assert_eq!(aah_bound_states_amplitudes(bs, 1, amps.as_mut_ptr(), 99), AahStatus::Ok);
        let norm: f64 = amps.iter().map(|a| a * a).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        aah_bound_states_free(bs);

        assert_eq!(aah_bound_states_find(sys, true, &mut bs), AahStatus::Ok);
        assert!(aah_bound_states_count(bs) >= 3);
        aah_bound_states_free(bs);
        aah_system_free(sys);
    }
}

#[test]
fn trajectory_through_the_c_interface() {
    let mut sys = ptr::null_mut();
    unsafe {
        assert_eq!(aah_system_new(20, 1.0, 1.0 / 3.0, 0.0, false, 0.1, 1.0, 10.0, &mut sys), AahStatus::Ok);
        let mut tr = ptr::null_mut();
        assert_eq!(aah_evolve_site(sys, 19, 5.0, 0.01, 10, &mut tr), AahStatus::Ok);
        let len = aah_trajectory_len(tr);
        assert_eq!(len, 51);
        let mut times = vec![0.0; len];
        assert_eq!(aah_trajectory_times(tr, times.as_mut_ptr(), len), AahStatus::Ok);
        assert!((times[len - 1] - 5.0).abs() < 1e-12);
        let mut pops = vec![0.0; 20];
        assert_eq!(aah_trajectory_populations(tr, 0, pops.as_mut_ptr(), 20), AahStatus::Ok);
        assert!((pops[19] - 1.0).abs() < 1e-12);
        assert_eq!(aah_trajectory_populations(tr, len - 1, pops.as_mut_ptr(), 20), AahStatus::Ok);
        assert!(pops.iter().sum::<f64>() < 1.0);
        assert_eq!(aah_trajectory_populations(tr, len, pops.as_mut_ptr(), 20), AahStatus::OutOfRange);
        aah_trajectory_free(tr);

        assert_eq!(aah_evolve_site(sys, 20, 5.0, 0.01, 10, &mut tr), AahStatus::InvalidArgument);
        assert_eq!(aah_evolve_site(sys, 0, 5.0, 0.5, 10, &mut tr), AahStatus::InvalidArgument);
        aah_system_free(sys);
    }
}

#[test]
fn header_declares_the_interface() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/aah.h")).unwrap();
    for name in [
        "aah_system_new",
        "aah_system_free",
        "aah_bound_states_find",
        "aah_evolve_site",
        "aah_last_error_message",
        "typedef struct AahSystem AahSystem;",
        "AAH_STATUS_OK = 0",
    ] {
        assert!(header.contains(name), "{name}");
    }
}
