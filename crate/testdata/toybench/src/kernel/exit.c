/* Task teardown notification. */

#include <linux/sched.h>

#define EXIT_ZOMBIE 16

void exit_notify_parent(struct task_struct *task)
{
	task->exit_state = EXIT_ZOMBIE;
	wake_up_task(task->parent);
}
