/* Task structure and scheduler entry points. */

#ifndef _LINUX_SCHED_H
#define _LINUX_SCHED_H

struct task_struct {
	int pid;
	int uid;
	int gid;
	int exit_state;
	struct task_struct *parent;
};

void wake_up_task(struct task_struct *task);

#endif
