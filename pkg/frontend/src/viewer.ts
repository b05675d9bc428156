/**
 * three.js scene for the workbench: phantom head, acquired-pick spheres,
 * registered ventricle overlay, entry marker, catheter segment, and guide
 * rings for the landmark the banner names.
 *
 * Rendering transforms reuse the server's registration matrix verbatim; the
 * client never refits or adjusts it.
 */

import * as THREE from 'three';

import { MeshPayload, RayPayload, RegistrationInfo, Vec3 } from './api.js';
import { OrbitState, orbitEye } from './view-state.js';

export function geometryFromMeshPayload(payload: MeshPayload): THREE.BufferGeometry {
  const geometry = new THREE.BufferGeometry();
  geometry.setAttribute('position', new THREE.Float32BufferAttribute(payload.positions, 3));
  geometry.setIndex(payload.indices);
  geometry.computeVertexNormals();
  return geometry;
}

/** Server registration dict -> homogeneous matrix (scale * R | t). */
export function registrationToMatrix(reg: RegistrationInfo): THREE.Matrix4 {
  const r = reg.rotation;
  const s = reg.scale;
  const t = reg.translation;
  const m = new THREE.Matrix4();
  m.set(
    s * r[0]![0]!, s * r[0]![1]!, s * r[0]![2]!, t[0],
    s * r[1]![0]!, s * r[1]![1]!, s * r[1]![2]!, t[1],
    s * r[2]![0]!, s * r[2]![1]!, s * r[2]![2]!, t[2],
    0, 0, 0, 1,
  );
  return m;
}

export function meshCentroid(payload: MeshPayload): Vec3 {
  let x = 0;
  let y = 0;
  let z = 0;
  const n = payload.positions.length / 3;
  for (let i = 0; i < n; i += 1) {
    x += payload.positions[3 * i]!;
    y += payload.positions[3 * i + 1]!;
    z += payload.positions[3 * i + 2]!;
  }
  return [x / n, y / n, z / n];
}

export interface Viewer {
  setHead: (payload: MeshPayload) => void;
  setVentricles: (payload: MeshPayload) => void;
  setRegistration: (reg: RegistrationInfo | null) => void;
  setPicks: (picks: Record<string, Vec3[]>) => void;
  setGuides: (positions: Record<string, Vec3>, currentId: string | null) => void;
  setEntry: (position: Vec3 | null) => void;
  setCatheter: (origin: Vec3 | null, tip: Vec3 | null) => void;
  setVentriclesVisible: (visible: boolean) => void;
  setPicksVisible: (visible: boolean) => void;
  setGuidesVisible: (visible: boolean) => void;
  setCatheterVisible: (visible: boolean) => void;
  applyOrbit: (orbit: OrbitState) => void;
  /** World-space pick ray through a canvas point; input math only. */
  pickRay: (clientX: number, clientY: number) => RayPayload;
  resize: () => void;
  dispose: () => void;
}

const HEAD_COLOR = 0xc9a98d;
const VENTRICLE_COLOR = 0x4aa3d8;
const PICK_COLOR = 0xd03a2f; // the acquired-landmark red sphere
const GUIDE_COLOR = 0xf0d060;
const ENTRY_COLOR = 0x3fa34d;
const CATHETER_COLOR = 0x222222;

export function createViewer(container: HTMLElement): Viewer {
  const renderer = new THREE.WebGLRenderer({ antialias: true });
  renderer.setPixelRatio(Math.min(window.devicePixelRatio, 2));
  renderer.setSize(container.clientWidth, container.clientHeight);
  renderer.setClearColor(0x10141a);
  container.appendChild(renderer.domElement);

  const scene = new THREE.Scene();
  const camera = new THREE.PerspectiveCamera(
    45,
    container.clientWidth / Math.max(1, container.clientHeight),
    1,
    10000,
  );

  scene.add(new THREE.AmbientLight(0xffffff, 0.55));
  const keyLight = new THREE.DirectionalLight(0xffffff, 1.1);
  keyLight.position.set(400, 300, 600);
  scene.add(keyLight);

  let headMesh: THREE.Mesh | null = null;
  const ventricleGroup = new THREE.Group();
  const pickGroup = new THREE.Group();
  const guideGroup = new THREE.Group();
  const entryGroup = new THREE.Group();
  const catheterGroup = new THREE.Group();
  scene.add(ventricleGroup, pickGroup, guideGroup, entryGroup, catheterGroup);

  const raycaster = new THREE.Raycaster();
  let disposed = false;

  function render() {
    if (disposed) return;
    renderer.render(scene, camera);
    requestAnimationFrame(render);
  }
  requestAnimationFrame(render);

  function clearGroup(group: THREE.Group) {
    while (group.children.length) group.remove(group.children[0]!);
  }

  function sphere(position: Vec3, radius: number, color: number, opacity = 1): THREE.Mesh {
    const mesh = new THREE.Mesh(
      new THREE.SphereGeometry(radius, 16, 12),
      new THREE.MeshStandardMaterial({ color, transparent: opacity < 1, opacity }),
    );
    mesh.position.set(...position);
    return mesh;
  }

  return {
    setHead(payload) {
      if (headMesh) scene.remove(headMesh);
      headMesh = new THREE.Mesh(
        geometryFromMeshPayload(payload),
        new THREE.MeshStandardMaterial({ color: HEAD_COLOR, roughness: 0.8 }),
      );
      scene.add(headMesh);
    },
    setVentricles(payload) {
      clearGroup(ventricleGroup);
      const mesh = new THREE.Mesh(
        geometryFromMeshPayload(payload),
        new THREE.MeshStandardMaterial({
          color: VENTRICLE_COLOR,
          transparent: true,
          opacity: 0.75,
          depthWrite: false,
        }),
      );
      ventricleGroup.add(mesh);
      ventricleGroup.visible = false; // shown once a registration arrives
    },
    setRegistration(reg) {
      if (!reg) {
        ventricleGroup.visible = false;
        return;
      }
      ventricleGroup.matrixAutoUpdate = false;
      ventricleGroup.matrix.copy(registrationToMatrix(reg));
      ventricleGroup.visible = true;
    },
    setPicks(picks) {
      clearGroup(pickGroup);
      for (const points of Object.values(picks)) {
        for (const p of points) pickGroup.add(sphere(p, 3.0, PICK_COLOR));
      }
    },
    setGuides(positions, currentId) {
      clearGroup(guideGroup);
      for (const [id, p] of Object.entries(positions)) {
        const active = id === currentId;
        guideGroup.add(sphere(p, active ? 4.5 : 2.5, GUIDE_COLOR, active ? 0.9 : 0.35));
      }
    },
    setEntry(position) {
      clearGroup(entryGroup);
      if (position) entryGroup.add(sphere(position, 4.0, ENTRY_COLOR));
    },
    setCatheter(origin, tip) {
      clearGroup(catheterGroup);
      if (!origin || !tip) return;
      const geometry = new THREE.BufferGeometry().setFromPoints([
        new THREE.Vector3(...origin),
        new THREE.Vector3(...tip),
      ]);
      catheterGroup.add(new THREE.Line(
        geometry,
        new THREE.LineBasicMaterial({ color: CATHETER_COLOR, linewidth: 2 }),
      ));
      catheterGroup.add(sphere(tip, 2.0, CATHETER_COLOR));
    },
    setVentriclesVisible(visible) {
      ventricleGroup.visible = visible && ventricleGroup.children.length > 0;
    },
    setPicksVisible(visible) {
      pickGroup.visible = visible;
    },
    setGuidesVisible(visible) {
      guideGroup.visible = visible;
    },
    setCatheterVisible(visible) {
      catheterGroup.visible = visible;
    },
    applyOrbit(orbit) {
      const eye = orbitEye(orbit);
      camera.position.set(...eye);
      camera.lookAt(...orbit.target);
      camera.updateMatrixWorld();
    },
    pickRay(clientX, clientY) {
      const rect = renderer.domElement.getBoundingClientRect();
      const ndc = new THREE.Vector2(
        ((clientX - rect.left) / rect.width) * 2 - 1,
        -((clientY - rect.top) / rect.height) * 2 + 1,
      );
      raycaster.setFromCamera(ndc, camera);
      const o = raycaster.ray.origin;
      const d = raycaster.ray.direction;
      return { origin: [o.x, o.y, o.z], direction: [d.x, d.y, d.z] };
    },
    resize() {
      camera.aspect = container.clientWidth / Math.max(1, container.clientHeight);
      camera.updateProjectionMatrix();
      renderer.setSize(container.clientWidth, container.clientHeight);
    },
    dispose() {
      disposed = true;
      renderer.dispose();
      renderer.domElement.remove();
    },
  };
}
